#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "dhash/choosers.hpp"

using namespace dhash;

namespace {

std::vector<std::uint32_t> as_vector(const ChoiceSet& c) { return {c.view().begin(), c.view().end()}; }

bool all_distinct(const ChoiceSet& c) {
  std::set<std::uint32_t> s(c.view().begin(), c.view().end());
  return s.size() == c.size;
}

}  // namespace

TEST_CASE("scheme tags round-trip") {
  for (auto s : {Scheme::random_wr, Scheme::random_distinct, Scheme::double_hash, Scheme::dleft_random,
                 Scheme::dleft_double}) {
    CHECK(parse_scheme(scheme_tag(s)) == s);
  }
  CHECK(scheme_tag(Scheme::double_hash) == "double");
  CHECK_FALSE(parse_scheme("triple").has_value());
}

TEST_CASE("double_hash_choices worked examples") {
  CHECK(as_vector(double_hash_choices(0, 1, 3, 8)) == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(as_vector(double_hash_choices(5, 3, 4, 13)) == std::vector<std::uint32_t>{5, 8, 11, 1});
  CHECK(as_vector(double_hash_choices(10, 7, 3, 16)) == std::vector<std::uint32_t>{10, 1, 8});
  CHECK(double_hash_choices(5, 3, 4, 13).scheme == Scheme::double_hash);
}

TEST_CASE("double_hash_choices rejects strides sharing a factor with n") {
  CHECK_THROWS_AS(double_hash_choices(0, 2, 3, 16), std::domain_error);
  CHECK_THROWS_AS(double_hash_choices(1, 4, 3, 12), std::domain_error);
  CHECK_THROWS_AS(double_hash_choices(0, 0, 2, 7), std::domain_error);
  CHECK_THROWS_AS(double_hash_choices(7, 1, 2, 7), std::domain_error);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(ChooserConfig::make(Scheme::double_hash, 8, 0), std::domain_error);
  CHECK_THROWS_AS(ChooserConfig::make(Scheme::double_hash, 8, 17), std::domain_error);
  CHECK_THROWS_AS(ChooserConfig::make(Scheme::random_distinct, 2, 3), std::domain_error);
  CHECK_THROWS_AS(ChooserConfig::make(Scheme::dleft_random, 10, 3), std::domain_error);
  CHECK_THROWS_AS(ChooserConfig::make(Scheme::random_wr, 0, 1), std::domain_error);
  CHECK_NOTHROW(ChooserConfig::make(Scheme::random_wr, 2, 3));
  const auto c = ChooserConfig::make(Scheme::dleft_double, 12, 3);
  CHECK(c.subtable_size() == 4);
  CHECK(c.n_class == NClass::power_of_two);
  CHECK(classify(13) == NClass::prime);
  CHECK(classify(12) == NClass::general);
}

TEST_CASE("double hashing at prime n gives d distinct bins") {
  RandomStream r(1);
  const auto cfg = ChooserConfig::make(Scheme::double_hash, 13, 4);
  for (int i = 0; i < 10000; ++i) {
    const auto c = draw_choices(r, cfg);
    REQUIRE(c.size == 4);
    CHECK(all_distinct(c));
  }
}

TEST_CASE("every scheme stays in range with the right shape") {
  RandomStream r(2);
  for (auto scheme : {Scheme::random_wr, Scheme::random_distinct, Scheme::double_hash, Scheme::dleft_random,
                      Scheme::dleft_double}) {
    for (std::uint32_t n : {12u, 16u, 13u * 4u}) {
      const auto cfg = ChooserConfig::make(scheme, n, 4);
      for (int i = 0; i < 2000; ++i) {
        const auto c = draw_choices(r, cfg);
        REQUIRE(c.size == 4);
        CHECK(c.scheme == scheme);
        for (auto b : c.view()) CHECK(b < n);
        if (scheme != Scheme::random_wr) CHECK(all_distinct(c));
      }
    }
  }
}

TEST_CASE("d-left choices fall in their subtables") {
  RandomStream r(3);
  for (auto scheme : {Scheme::dleft_random, Scheme::dleft_double}) {
    const auto cfg = ChooserConfig::make(scheme, 12, 3);
    std::vector<std::set<std::uint32_t>> seen(3);
    for (int i = 0; i < 5000; ++i) {
      const auto c = draw_choices(r, cfg);
      for (std::uint32_t k = 0; k < 3; ++k) {
        CHECK(c[k] >= 4 * k);
        CHECK(c[k] <= 4 * k + 3);
        seen[k].insert(c[k]);
      }
    }
    for (const auto& s : seen) CHECK(s.size() == 4);
  }
}

TEST_CASE("degenerate sizes") {
  RandomStream r(4);
  const auto one = ChooserConfig::make(Scheme::double_hash, 1, 1);
  CHECK(draw_choices(r, one)[0] == 0);
  // Subtables of size 1 pin every choice.
  const auto pinned = ChooserConfig::make(Scheme::dleft_double, 4, 4);
  CHECK(as_vector(draw_choices(r, pinned)) == std::vector<std::uint32_t>{0, 1, 2, 3});
}

TEST_CASE("n=7, d=3: the 42 (f, g) pairs hit each ordered bin pair once") {
  std::vector<int> hits(49, 0);
  for (std::uint64_t f = 0; f < 7; ++f)
    for (std::uint64_t g = 1; g < 7; ++g) {
      const auto c = double_hash_choices(f, g, 3, 7);
      ++hits[c[0] * 7 + c[1]];
    }
  for (std::uint32_t a = 0; a < 7; ++a)
    for (std::uint32_t b = 0; b < 7; ++b) CHECK(hits[a * 7 + b] == (a == b ? 0 : 1));
}

TEST_CASE("pairwise uniformity of any two positions at prime n") {
  // For k < l, (h_k, h_l) is a bijective image of (f, g) whenever n is prime.
  for (std::uint32_t n : {5u, 7u, 11u, 13u}) {
    const std::uint32_t d = std::min<std::uint32_t>(n, 5);
    for (std::uint32_t k = 0; k < d; ++k)
      for (std::uint32_t l = k + 1; l < d; ++l) {
        std::vector<int> hits(n * n, 0);
        for (std::uint64_t f = 0; f < n; ++f)
          for (std::uint64_t g = 1; g < n; ++g) {
            const auto c = double_hash_choices(f, g, d, n);
            ++hits[c[k] * n + c[l]];
          }
        for (std::uint32_t a = 0; a < n; ++a)
          for (std::uint32_t b = 0; b < n; ++b) {
            CAPTURE(n);
            CAPTURE(k);
            CAPTURE(l);
            CHECK(hits[a * n + b] == (a == b ? 0 : 1));
          }
      }
  }
}

TEST_CASE("sampled first pair is uniform at prime n") {
  RandomStream r(5);
  const auto cfg = ChooserConfig::make(Scheme::double_hash, 7, 3);
  std::vector<std::uint64_t> hits(49, 0);
  const std::uint64_t draws = 84000;
  for (std::uint64_t i = 0; i < draws; ++i) {
    const auto c = draw_choices(r, cfg);
    ++hits[c[0] * 7 + c[1]];
  }
  const double mean = static_cast<double>(draws) / 42;
  const double sigma = std::sqrt(draws * (1.0 / 42) * (41.0 / 42));
  for (std::uint32_t a = 0; a < 7; ++a)
    for (std::uint32_t b = 0; b < 7; ++b) {
      if (a == b) {
        CHECK(hits[a * 7 + b] == 0);
      } else {
        CHECK(std::abs(static_cast<double>(hits[a * 7 + b]) - mean) <= 5 * sigma);
      }
    }
}

TEST_CASE("n=16, odd g: all four choices distinct for every (f, g)") {
  for (std::uint64_t f = 0; f < 16; ++f)
    for (std::uint64_t g = 1; g < 16; g += 2) CHECK(all_distinct(double_hash_choices(f, g, 4, 16)));
}
