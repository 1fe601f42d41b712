#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "dhash/stats.hpp"

using namespace dhash;

namespace {

TrialSummary summary_of(std::vector<std::uint32_t> loads, Scheme scheme = Scheme::double_hash, std::uint32_t d = 3) {
  LoadState s;
  s.loads = std::move(loads);
  for (auto l : s.loads) s.balls_placed += l;
  return TrialSummary::of(s, scheme, d);
}

std::vector<TrialSummary> simulated_rows(std::uint32_t n, std::uint64_t m, int trials, Scheme scheme) {
  std::vector<TrialSummary> rows;
  const auto cfg = ChooserConfig::make(scheme, n, 3);
  for (int i = 0; i < trials; ++i) {
    auto r = RandomStream::for_trial(8, i);
    rows.push_back(TrialSummary::of(run_trial(n, m, cfg, TieBreak::random, r), scheme, 3));
  }
  return rows;
}

}  // namespace

TEST_CASE("single trial [0,1,1,2]") {
  const std::vector<TrialSummary> rows{summary_of({0, 1, 1, 2})};
  const auto agg = aggregate(rows);
  CHECK(agg.trials() == 1);
  CHECK(agg.max_load() == 2);
  const auto f = agg.fractions();
  REQUIRE(f.size() == 3);
  CHECK(f(0) == 0.25);
  CHECK(f(1) == 0.5);
  CHECK(f(2) == 0.25);
  const auto t = agg.tail();
  CHECK(t(0) == 1.0);
  CHECK(t(1) == 0.75);
  CHECK(t(2) == 0.25);
  CHECK(agg.std_count(1) == 0.0);
  CHECK(agg.max_load_distribution().at(2) == 1.0);
}

TEST_CASE("identical trials have zero spread") {
  const std::vector<TrialSummary> rows(50, summary_of({3, 0, 1, 1, 2, 0}));
  const auto agg = aggregate(rows);
  for (std::uint32_t l = 0; l <= agg.max_load(); ++l) {
    CHECK(agg.std_count(l) == 0.0);
    CHECK(agg.at(l).min == agg.at(l).max);
  }
}

TEST_CASE("per-load moments match a direct computation") {
  const auto rows = simulated_rows(512, 512, 200, Scheme::double_hash);
  const auto agg = aggregate(rows);
  for (std::uint32_t l = 0; l <= agg.max_load(); ++l) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(l < r.counts.size() ? static_cast<double>(r.counts[l]) : 0.0);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    CAPTURE(l);
    CHECK(agg.mean_count(l) == doctest::Approx(mean).epsilon(1e-12));
    CHECK(agg.std_count(l) == doctest::Approx(sd).epsilon(1e-9));
    CHECK(static_cast<double>(agg.at(l).min) == *std::min_element(v.begin(), v.end()));
    CHECK(static_cast<double>(agg.at(l).max) == *std::max_element(v.begin(), v.end()));
  }
  double total = 0;
  for (const auto& [_, p] : agg.max_load_distribution()) total += p;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("order and grouping do not matter") {
  auto rows = simulated_rows(256, 1024, 60, Scheme::random_distinct);
  const auto reference = aggregate(rows);

  std::mt19937_64 shuffle(5);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(rows.begin(), rows.end(), shuffle);
    CHECK(aggregate(rows) == reference);
  }

  // (A + B) + C == A + (B + C), and folding into an empty aggregate is a no-op.
  const std::span<const TrialSummary> all(rows);
  const auto a = aggregate(all.subspan(0, 10));
  const auto b = aggregate(all.subspan(10, 30));
  const auto c = aggregate(all.subspan(40));
  auto left = a;
  left.merge(b);
  left.merge(c);
  auto right_tail = b;
  right_tail.merge(c);
  auto right = a;
  right.merge(right_tail);
  CHECK(left == right);
  CHECK(left == reference);
  TrialAggregate empty;
  empty.merge(reference);
  CHECK(empty == reference);
}

TEST_CASE("rows with different max loads line up") {
  const std::vector<TrialSummary> rows{summary_of({1, 1, 1, 1}), summary_of({0, 0, 0, 4})};
  const auto agg = aggregate(rows);
  CHECK(agg.max_load() == 4);
  CHECK(agg.at(1).min == 0);
  CHECK(agg.at(1).max == 4);
  CHECK(agg.at(0).min == 0);
  CHECK(agg.at(0).max == 3);
  CHECK(agg.fractions()(4) == 0.125);
  CHECK(agg.max_load_counts().at(1) == 1);
  CHECK(agg.max_load_counts().at(4) == 1);
}

TEST_CASE("aggregate errors") {
  CHECK_THROWS_AS(aggregate(std::span<const TrialSummary>{}), std::domain_error);
  const std::vector<TrialSummary> mixed{summary_of({1, 1}), summary_of({1, 1, 0})};
  CHECK_THROWS_AS(aggregate(mixed), std::domain_error);
  const std::vector<TrialSummary> schemes{summary_of({1, 1}), summary_of({1, 1}, Scheme::random_distinct)};
  CHECK_THROWS_AS(aggregate(schemes), std::domain_error);
  auto x = aggregate(std::vector<TrialSummary>{summary_of({1, 1})});
  CHECK_THROWS_AS(x.merge(aggregate(std::vector<TrialSummary>{summary_of({2, 0, 0})})), std::domain_error);
}

TEST_CASE("compare") {
  const auto a = aggregate(simulated_rows(512, 512, 40, Scheme::double_hash));
  const auto c = compare(a, a);
  CHECK(c.max_load_diff() == 0.0);
  CHECK(c.max_tail_diff() == 0.0);
  CHECK_FALSE(c.a_vs_reference.has_value());

  const auto b = aggregate(simulated_rows(512, 512, 40, Scheme::random_distinct));
  Eigen::VectorXd ref(4);
  ref << 1.0, 0.8230405, 0.1764518, 0.0005077;
  const auto with_ref = compare(a, b, ref);
  REQUIRE(with_ref.a_vs_reference.has_value());
  CHECK(with_ref.a_vs_reference->size() == 3);
  CHECK(with_ref.a_vs_reference->maxCoeff() < 0.01);
  CHECK(with_ref.b_vs_reference->maxCoeff() < 0.01);
  CHECK(with_ref.max_load_diff() < 0.01);

  const auto other = aggregate(simulated_rows(256, 256, 5, Scheme::double_hash));
  CHECK_THROWS_AS(compare(a, other), std::domain_error);
}
