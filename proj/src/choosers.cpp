#include "dhash/choosers.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace dhash {

namespace {

constexpr std::array<std::pair<Scheme, std::string_view>, 5> kTags{{
    {Scheme::random_wr, "random_wr"},
    {Scheme::random_distinct, "random_distinct"},
    {Scheme::double_hash, "double"},
    {Scheme::dleft_random, "dleft_random"},
    {Scheme::dleft_double, "dleft_double"},
}};

}  // namespace

std::string_view scheme_tag(Scheme s) noexcept {
  for (const auto& [scheme, tag] : kTags)
    if (scheme == s) return tag;
  return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view tag) noexcept {
  for (const auto& [scheme, name] : kTags)
    if (name == tag) return scheme;
  return std::nullopt;
}

NClass classify(std::uint64_t n) noexcept {
  if (is_power_of_two(n)) return NClass::power_of_two;
  if (is_prime(n)) return NClass::prime;
  return NClass::general;
}

ChooserConfig ChooserConfig::make(Scheme scheme, std::uint32_t n, std::uint32_t d) {
  ChooserConfig cfg{scheme, n, d, NClass::general};
  validate(cfg);
  cfg.n_class = classify(cfg.subtable_size());
  return cfg;
}

void validate(const ChooserConfig& cfg) {
  if (cfg.d < 1) throw std::domain_error("choices: d must be at least 1");
  if (cfg.d > kMaxChoices)
    throw std::domain_error("choices: d must be at most " + std::to_string(kMaxChoices));
  if (cfg.n < 1) throw std::domain_error("choices: n must be at least 1");
  switch (cfg.scheme) {
    case Scheme::random_wr:
      break;
    case Scheme::random_distinct:
    case Scheme::double_hash:
      if (cfg.n < cfg.d) throw std::domain_error("choices: n must be at least d for distinct schemes");
      break;
    case Scheme::dleft_random:
    case Scheme::dleft_double:
      if (cfg.n % cfg.d != 0) throw std::domain_error("choices: d must divide n for d-left schemes");
      break;
  }
}

ChoiceSet double_hash_choices(std::uint64_t f, std::uint64_t g, std::uint32_t d, std::uint32_t n) {
  if (n == 0 || f >= n) throw std::domain_error("double_hash_choices: f must lie in [0, n-1]");
  if (d > n || d > kMaxChoices) throw std::domain_error("double_hash_choices: d out of range");
  if (n > 1 && (g == 0 || g >= n || std::gcd(g, std::uint64_t{n}) != 1))
    throw std::domain_error("double_hash_choices: g must be coprime to n");
  ChoiceSet out;
  out.scheme = Scheme::double_hash;
  out.size = static_cast<std::uint8_t>(d);
  std::uint64_t h = f;
  for (std::uint32_t k = 0; k < d; ++k) {
    out.bins[k] = static_cast<std::uint32_t>(h);
    h += g;
    if (h >= n) h -= n;
  }
  return out;
}

std::uint64_t sample_stride(RandomStream& stream, std::uint64_t n, NClass n_class) {
  switch (n_class) {
    case NClass::prime:
      if (n < 2) break;
      return 1 + uniform_below(stream, n - 1);
    case NClass::power_of_two:
    case NClass::general:
      break;
  }
  return sample_stride(stream, n);
}

ChoiceSet draw_choices(RandomStream& stream, const ChooserConfig& cfg) {
  ChoiceSet out;
  out.scheme = cfg.scheme;
  out.size = static_cast<std::uint8_t>(cfg.d);
  const std::uint32_t d = cfg.d;
  switch (cfg.scheme) {
    case Scheme::random_wr:
      for (std::uint32_t k = 0; k < d; ++k)
        out.bins[k] = static_cast<std::uint32_t>(uniform_below(stream, cfg.n));
      break;
    case Scheme::random_distinct:
      sample_distinct(stream, cfg.n, std::span<std::uint32_t>(out.bins.data(), d));
      break;
    case Scheme::double_hash: {
      if (cfg.n == 1) {
        out.bins[0] = 0;
        break;
      }
      const std::uint64_t f = uniform_below(stream, cfg.n);
      const std::uint64_t g = sample_stride(stream, cfg.n, cfg.n_class);
      std::uint64_t h = f;
      for (std::uint32_t k = 0; k < d; ++k) {
        out.bins[k] = static_cast<std::uint32_t>(h);
        h += g;
        if (h >= cfg.n) h -= cfg.n;
      }
      break;
    }
    case Scheme::dleft_random: {
      const std::uint32_t s = cfg.n / d;
      for (std::uint32_t k = 0; k < d; ++k)
        out.bins[k] = k * s + static_cast<std::uint32_t>(uniform_below(stream, s));
      break;
    }
    case Scheme::dleft_double: {
      const std::uint32_t s = cfg.n / d;
      if (s == 1) {
        for (std::uint32_t k = 0; k < d; ++k) out.bins[k] = k;
        break;
      }
      const std::uint64_t f = uniform_below(stream, s);
      const std::uint64_t g = sample_stride(stream, s, cfg.n_class);
      std::uint64_t h = f;
      for (std::uint32_t k = 0; k < d; ++k) {
        out.bins[k] = k * s + static_cast<std::uint32_t>(h);
        h += g;
        if (h >= s) h -= s;
      }
      break;
    }
  }
  return out;
}

}  // namespace dhash
