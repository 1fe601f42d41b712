#ifndef DHASH_RNG_HPP
#define DHASH_RNG_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dhash {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of sub-stream `index` under `master_seed`:
///   mix(master_seed ^ mix(index + 0x9E3779B97F4A7C15))
/// Both steps are bijections, so distinct indices never share a seed.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return splitmix64_mix(master_seed ^ splitmix64_mix(index + 0x9E3779B97F4A7C15ULL));
}

/// xoshiro256** seeded by expanding a 64-bit seed through SplitMix64.
/// Single owner; copy it to fork an identical sequence.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  static constexpr std::string_view generator_id = "xoshiro256starstar-splitmix64";

  explicit RandomStream(std::uint64_t seed) noexcept;

  static RandomStream for_trial(std::uint64_t master_seed, std::uint64_t trial_index) noexcept {
    return RandomStream(derive_seed(master_seed, trial_index));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~std::uint64_t{0}; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
};

[[noreturn]] void throw_empty_range();

/// Uniform integer in [0, n-1]; multiply-shift with rejection of the biased
/// low region. Throws std::domain_error for n == 0.
inline std::uint64_t uniform_below(RandomStream& stream, std::uint64_t n) {
  if (n == 0) throw_empty_range();
  using u128 = unsigned __int128;
  u128 product = static_cast<u128>(stream()) * n;
  auto low = static_cast<std::uint64_t>(product);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      product = static_cast<u128>(stream()) * n;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

/// Uniform double in (0, 1], 53-bit resolution.
inline double uniform_open_closed(RandomStream& stream) noexcept {
  return static_cast<double>((stream() >> 11) + 1) * 0x1.0p-53;
}

/// Uniform stride g in [1, n-1] with gcd(g, n) == 1. Powers of two draw a
/// uniform odd number directly; everything else rejects over [1, n-1].
std::uint64_t sample_stride(RandomStream& stream, std::uint64_t n);

/// Fills `out` with out.size() distinct values in [0, n-1], uniform over
/// ordered tuples. Resamples on collision while d is small relative to n and
/// falls back to a partial Fisher-Yates shuffle otherwise.
void sample_distinct(RandomStream& stream, std::uint64_t n, std::span<std::uint32_t> out);

std::vector<std::uint32_t> sample_distinct(RandomStream& stream, std::uint64_t n, std::uint64_t d);

/// -ln(u) / rate, the inverse-CDF map of an exponential variate.
double exponential_from_uniform(double u, double rate);

/// Exponential variate with the given rate (mean 1/rate).
double sample_exponential(RandomStream& stream, double rate);

constexpr bool is_power_of_two(std::uint64_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

bool is_prime(std::uint64_t n) noexcept;

}  // namespace dhash

#endif  // DHASH_RNG_HPP
