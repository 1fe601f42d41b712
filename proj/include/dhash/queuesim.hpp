#ifndef DHASH_QUEUESIM_HPP
#define DHASH_QUEUESIM_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "dhash/choosers.hpp"
#include "dhash/rng.hpp"

namespace dhash {

/// How the continuous-time system advances.
///  - event: time-ordered schedule of the next arrival and one departure per
///    busy queue; service drawn when a job reaches the head of its queue.
///  - race: competing exponential clocks. The next event fires after an
///    Exp(lambda n + busy) wait and is an arrival with probability
///    lambda n / (lambda n + busy), otherwise a departure from a uniformly
///    chosen busy queue. Same law as `event` for exponential service.
enum class QueueEngine : std::uint8_t { event, race };

std::string_view engine_tag(QueueEngine e) noexcept;
std::optional<QueueEngine> parse_engine(std::string_view tag) noexcept;

inline constexpr std::size_t kTailLevels = 4;

struct QueueSimConfig {
  std::uint32_t n = 0;
  double lambda = 0.0;
  std::uint32_t d = 2;
  Scheme scheme = Scheme::random_distinct;
  double horizon = 0.0;
  double burn_in = 0.0;
  QueueEngine engine = QueueEngine::race;
  /// Windows over [0, horizon] for the time-averaged jobs-in-system trace.
  std::uint32_t windows = 10;
};

/// Throws std::domain_error on an invalid configuration.
void validate(const QueueSimConfig& cfg);

struct QueueSimResult {
  double mean_sojourn = 0.0;
  std::uint64_t jobs_counted = 0;
  /// tail[i-1]: time-averaged fraction of queues holding at least i jobs over
  /// [burn_in, horizon].
  std::array<double, kTailLevels> tail{};
  std::uint64_t arrivals = 0;
  std::uint64_t departures = 0;
  std::uint64_t in_system = 0;
  /// Time-averaged total jobs in system per window.
  std::vector<double> window_jobs;
  /// Final queue lengths.
  std::vector<std::uint32_t> queue_lengths;
};

QueueSimResult simulate_queues(const QueueSimConfig& cfg, RandomStream& stream);

}  // namespace dhash

#endif  // DHASH_QUEUESIM_HPP
