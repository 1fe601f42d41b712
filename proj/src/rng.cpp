#include "dhash/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace dhash {

RandomStream::RandomStream(std::uint64_t seed) noexcept : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) {
    x += 0x9E3779B97F4A7C15ULL;
    word = splitmix64_mix(x);
  }
}

void throw_empty_range() { throw std::domain_error("uniform_below: n must be positive"); }

std::uint64_t sample_stride(RandomStream& stream, std::uint64_t n) {
  if (n < 2) throw std::domain_error("sample_stride: n must be at least 2");
  if (is_power_of_two(n)) return 2 * uniform_below(stream, n / 2) + 1;
  for (;;) {
    const std::uint64_t g = 1 + uniform_below(stream, n - 1);
    if (std::gcd(g, n) == 1) return g;
  }
}

void sample_distinct(RandomStream& stream, std::uint64_t n, std::span<std::uint32_t> out) {
  const std::uint64_t d = out.size();
  if (d > n) throw std::domain_error("sample_distinct: d exceeds n");
  if (n > std::uint64_t{1} << 32) throw std::domain_error("sample_distinct: n exceeds 32-bit range");

  if (d <= 16 && 2 * d <= n) {
    for (std::size_t k = 0; k < d; ++k) {
      for (;;) {
        const auto v = static_cast<std::uint32_t>(uniform_below(stream, n));
        bool seen = false;
        for (std::size_t j = 0; j < k; ++j) seen |= (out[j] == v);
        if (!seen) {
          out[k] = v;
          break;
        }
      }
    }
    return;
  }

  // Partial Fisher-Yates over a sparse view of the identity permutation.
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto at = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  for (std::uint64_t k = 0; k < d; ++k) {
    const std::uint64_t j = k + uniform_below(stream, n - k);
    const std::uint64_t vj = at(j);
    const std::uint64_t vk = at(k);
    swapped[j] = vk;
    out[k] = static_cast<std::uint32_t>(vj);
  }
}

std::vector<std::uint32_t> sample_distinct(RandomStream& stream, std::uint64_t n, std::uint64_t d) {
  if (d > n) throw std::domain_error("sample_distinct: d exceeds n");
  std::vector<std::uint32_t> out(d);
  sample_distinct(stream, n, std::span<std::uint32_t>(out));
  return out;
}

double exponential_from_uniform(double u, double rate) {
  if (!(rate > 0.0)) throw std::domain_error("exponential: rate must be positive");
  if (!(u > 0.0 && u <= 1.0)) throw std::domain_error("exponential: u must lie in (0, 1]");
  return std::fabs(std::log(u)) / rate;
}

double sample_exponential(RandomStream& stream, double rate) {
  if (!(rate > 0.0)) throw std::domain_error("sample_exponential: rate must be positive");
  return std::fabs(std::log(uniform_open_closed(stream))) / rate;
}

bool is_prime(std::uint64_t n) noexcept {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t p = 3; p <= n / p; p += 2)
    if (n % p == 0) return false;
  return true;
}

}  // namespace dhash
