#ifndef DHASH_ALLOCATOR_HPP
#define DHASH_ALLOCATOR_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dhash/choosers.hpp"
#include "dhash/rng.hpp"

namespace dhash {

enum class TieBreak : std::uint8_t { random, leftmost };

std::string_view tie_break_tag(TieBreak t) noexcept;
std::optional<TieBreak> parse_tie_break(std::string_view tag) noexcept;

/// Balls per bin for one run of the sequential process.
struct LoadState {
  std::vector<std::uint32_t> loads;
  std::uint64_t balls_placed = 0;

  LoadState() = default;
  explicit LoadState(std::uint32_t n) : loads(n, 0) {}

  std::uint32_t n() const noexcept { return static_cast<std::uint32_t>(loads.size()); }
  std::uint32_t max_load() const noexcept;
  /// counts[i] = number of bins with load exactly i, for i = 0..max_load.
  std::vector<std::uint64_t> load_counts() const;
};

/// Number of minimal-load entries among `choices`.
std::uint32_t count_minima(std::span<const std::uint32_t> loads, const ChoiceSet& choices) noexcept;

/// The `rank`-th (0-based, in choice order) bin among those of minimal load.
/// Leftmost placement is rank 0.
std::uint32_t nth_minimum(std::span<const std::uint32_t> loads, const ChoiceSet& choices,
                          std::uint32_t rank) noexcept;

/// Least loaded choice under the given tie rule. Draws from `stream` only
/// when a random tie actually has to be broken.
std::uint32_t least_loaded(std::span<const std::uint32_t> loads, const ChoiceSet& choices, TieBreak policy,
                           RandomStream& stream);

/// Increments the least loaded of `choices` and returns that bin.
std::uint32_t place_ball(LoadState& state, const ChoiceSet& choices, TieBreak policy, RandomStream& stream);

/// Flat record of every ball's choices, in placement order. Ball j carries
/// time index j.
struct AncestryLog {
  bool enabled = false;
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::vector<std::uint32_t> choices;  // size balls * d

  std::uint64_t balls() const noexcept { return d == 0 ? 0 : choices.size() / d; }
  std::span<const std::uint32_t> ball(std::uint64_t j) const noexcept { return {choices.data() + j * d, d}; }
  void record(const ChoiceSet& c);
};

/// Places m balls with choices drawn per `cfg`. Appends to `log` when given
/// and enabled.
LoadState run_trial(std::uint32_t n, std::uint64_t m, const ChooserConfig& cfg, TieBreak policy,
                    RandomStream& stream, AncestryLog* log = nullptr);

/// Size in distinct bins of each bin's ancestry list at the end of the
/// logged run. Throws std::logic_error if the log was not enabled.
std::vector<std::uint32_t> ancestry_sizes(const AncestryLog& log);

/// Runs a tracked trial and returns the per-bin ancestry sizes.
std::vector<std::uint32_t> ancestry_sizes(std::uint32_t n, std::uint64_t m, const ChooserConfig& cfg,
                                          TieBreak policy, RandomStream& stream);

/// True when sorted-descending `x` majorizes sorted-descending `y`: equal
/// totals and every prefix sum of x at least that of y.
bool majorizes(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y) noexcept;

/// Two coupled processes on load vectors kept in descending order: X uses two
/// distinct uniform positions a, b; Y uses the double-hash sequence
/// a, b, 2b-a, ... (mod n) on its own sorted order.
struct CoupledPair {
  LoadState x_loads;
  LoadState y_loads;
  std::uint64_t step = 0;
};

struct CoupledTrace {
  CoupledPair final_state;
  std::uint64_t steps = 0;
  std::uint64_t violations = 0;
  std::vector<bool> verdicts;  // verdicts[t] after step t; empty unless requested
};

CoupledTrace run_coupled(std::uint32_t n, std::uint64_t m, std::uint32_t d, RandomStream& stream,
                         bool keep_verdicts = false);

}  // namespace dhash

#endif  // DHASH_ALLOCATOR_HPP
