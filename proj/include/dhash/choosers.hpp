#ifndef DHASH_CHOOSERS_HPP
#define DHASH_CHOOSERS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "dhash/rng.hpp"

namespace dhash {

inline constexpr std::size_t kMaxChoices = 16;

enum class Scheme : std::uint8_t {
  random_wr,        // fully random, with replacement
  random_distinct,  // fully random, d distinct bins
  double_hash,      // f + k g mod n
  dleft_random,     // one uniform bin per subtable
  dleft_double,     // double hashing inside subtables of size n/d
};

/// Exact tag strings used in config files and CSV columns.
std::string_view scheme_tag(Scheme s) noexcept;
std::optional<Scheme> parse_scheme(std::string_view tag) noexcept;

constexpr bool is_dleft(Scheme s) noexcept {
  return s == Scheme::dleft_random || s == Scheme::dleft_double;
}

enum class NClass : std::uint8_t { prime, power_of_two, general };

NClass classify(std::uint64_t n) noexcept;

/// The ordered d bins offered to one ball. Fixed capacity, no allocation.
struct ChoiceSet {
  std::array<std::uint32_t, kMaxChoices> bins{};
  std::uint8_t size = 0;
  Scheme scheme = Scheme::random_distinct;

  std::span<const std::uint32_t> view() const noexcept { return {bins.data(), size}; }
  std::uint32_t operator[](std::size_t k) const noexcept { return bins[k]; }
};

struct ChooserConfig {
  Scheme scheme = Scheme::random_distinct;
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  NClass n_class = NClass::general;

  /// Builds a config with n_class derived from n; throws std::domain_error
  /// when the combination violates the scheme's requirements.
  static ChooserConfig make(Scheme scheme, std::uint32_t n, std::uint32_t d);

  std::uint32_t subtable_size() const noexcept { return is_dleft(scheme) ? n / d : n; }
};

/// Throws std::domain_error describing the first violated requirement.
void validate(const ChooserConfig& cfg);

/// bins[k] = (f + k g) mod n for k = 0..d-1. Requires gcd(g, n) == 1.
ChoiceSet double_hash_choices(std::uint64_t f, std::uint64_t g, std::uint32_t d, std::uint32_t n);

/// Stride sampler honouring the precomputed class of n.
std::uint64_t sample_stride(RandomStream& stream, std::uint64_t n, NClass n_class);

ChoiceSet draw_choices(RandomStream& stream, const ChooserConfig& cfg);

}  // namespace dhash

#endif  // DHASH_CHOOSERS_HPP
