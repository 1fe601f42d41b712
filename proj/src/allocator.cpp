#include "dhash/allocator.hpp"

#include <algorithm>
#include <stdexcept>

namespace dhash {

std::string_view tie_break_tag(TieBreak t) noexcept { return t == TieBreak::random ? "random" : "leftmost"; }

std::optional<TieBreak> parse_tie_break(std::string_view tag) noexcept {
  if (tag == "random") return TieBreak::random;
  if (tag == "leftmost" || tag == "left") return TieBreak::leftmost;
  return std::nullopt;
}

std::uint32_t LoadState::max_load() const noexcept {
  return loads.empty() ? 0 : *std::max_element(loads.begin(), loads.end());
}

std::vector<std::uint64_t> LoadState::load_counts() const {
  std::vector<std::uint64_t> counts(std::size_t{max_load()} + 1, 0);
  for (auto l : loads) ++counts[l];
  return counts;
}

std::uint32_t count_minima(std::span<const std::uint32_t> loads, const ChoiceSet& choices) noexcept {
  std::uint32_t best = loads[choices[0]];
  std::uint32_t count = 1;
  for (std::size_t k = 1; k < choices.size; ++k) {
    const std::uint32_t l = loads[choices[k]];
    if (l < best) {
      best = l;
      count = 1;
    } else if (l == best) {
      ++count;
    }
  }
  return count;
}

std::uint32_t nth_minimum(std::span<const std::uint32_t> loads, const ChoiceSet& choices,
                          std::uint32_t rank) noexcept {
  std::uint32_t best = loads[choices[0]];
  for (std::size_t k = 1; k < choices.size; ++k) best = std::min(best, loads[choices[k]]);
  for (std::size_t k = 0; k < choices.size; ++k) {
    if (loads[choices[k]] == best) {
      if (rank == 0) return choices[k];
      --rank;
    }
  }
  return choices[0];
}

std::uint32_t least_loaded(std::span<const std::uint32_t> loads, const ChoiceSet& choices, TieBreak policy,
                           RandomStream& stream) {
  // Single pass: leftmost keeps the first minimum, random keeps a uniform
  // one by reservoir replacement.
  std::uint32_t chosen = choices[0];
  std::uint32_t best = loads[chosen];
  std::uint32_t ties = 1;
  for (std::size_t k = 1; k < choices.size; ++k) {
    const std::uint32_t b = choices[k];
    const std::uint32_t l = loads[b];
    if (l < best) {
      best = l;
      chosen = b;
      ties = 1;
    } else if (l == best && policy == TieBreak::random) {
      ++ties;
      if (uniform_below(stream, ties) == 0) chosen = b;
    }
  }
  return chosen;
}

std::uint32_t place_ball(LoadState& state, const ChoiceSet& choices, TieBreak policy, RandomStream& stream) {
  const std::uint32_t bin = least_loaded(state.loads, choices, policy, stream);
  ++state.loads[bin];
  ++state.balls_placed;
  return bin;
}

void AncestryLog::record(const ChoiceSet& c) {
  choices.insert(choices.end(), c.bins.begin(), c.bins.begin() + c.size);
}

LoadState run_trial(std::uint32_t n, std::uint64_t m, const ChooserConfig& cfg, TieBreak policy,
                    RandomStream& stream, AncestryLog* log) {
  if (cfg.n != n) throw std::domain_error("run_trial: chooser n does not match bin count");
  validate(cfg);
  if (is_dleft(cfg.scheme) && policy != TieBreak::leftmost)
    throw std::domain_error("run_trial: d-left schemes require leftmost tie-breaking");

  const bool tracking = log != nullptr && log->enabled;
  if (tracking) {
    log->n = n;
    log->d = cfg.d;
    log->choices.clear();
    log->choices.reserve(m * cfg.d);
  }

  LoadState state(n);
  for (std::uint64_t j = 0; j < m; ++j) {
    const ChoiceSet c = draw_choices(stream, cfg);
    if (tracking) log->record(c);
    place_ball(state, c, policy, stream);
  }
  return state;
}

bool majorizes(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y) noexcept {
  if (x.size() != y.size()) return false;
  std::int64_t gap = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    gap += std::int64_t{x[i]} - std::int64_t{y[i]};
    if (gap < 0) return false;
  }
  return gap == 0;
}

namespace {

// Adds one ball at sorted position p of a descending vector while keeping it
// sorted: the increment lands on the first entry of p's run of equal loads.
void increment_sorted(std::vector<std::uint32_t>& v, std::size_t p) {
  const std::uint32_t value = v[p];
  const auto first = std::lower_bound(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(p) + 1, value,
                                      [](std::uint32_t a, std::uint32_t b) { return a > b; });
  ++*first;
}

}  // namespace

CoupledTrace run_coupled(std::uint32_t n, std::uint64_t m, std::uint32_t d, RandomStream& stream,
                         bool keep_verdicts) {
  if (!is_prime(n)) throw std::domain_error("run_coupled: n must be prime");
  if (d < 2 || d > n) throw std::domain_error("run_coupled: d must lie in [2, n]");

  CoupledTrace trace;
  trace.final_state.x_loads = LoadState(n);
  trace.final_state.y_loads = LoadState(n);
  auto& x = trace.final_state.x_loads;
  auto& y = trace.final_state.y_loads;
  if (keep_verdicts) trace.verdicts.reserve(m);

  std::array<std::uint32_t, 2> ab{};
  for (std::uint64_t t = 0; t < m; ++t) {
    sample_distinct(stream, n, std::span<std::uint32_t>(ab));
    const std::uint64_t a = ab[0];
    const std::uint64_t b = ab[1];

    // Deeper sorted position means a load no larger, so the least loaded
    // choice is the deepest one.
    increment_sorted(x.loads, std::max(a, b));

    const std::uint64_t gap = (b + n - a) % n;
    std::uint64_t pos = a;
    std::uint64_t deepest = a;
    for (std::uint32_t k = 1; k < d; ++k) {
      pos = (pos + gap) % n;
      deepest = std::max(deepest, pos);
    }
    increment_sorted(y.loads, deepest);

    ++x.balls_placed;
    ++y.balls_placed;
    const bool ok = majorizes(x.loads, y.loads);
    if (!ok) ++trace.violations;
    if (keep_verdicts) trace.verdicts.push_back(ok);
  }
  trace.steps = m;
  trace.final_state.step = m;
  return trace;
}

}  // namespace dhash
