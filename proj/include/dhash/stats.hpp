#ifndef DHASH_STATS_HPP
#define DHASH_STATS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dhash/allocator.hpp"
#include "dhash/choosers.hpp"

namespace dhash {

/// One trial reduced to its load histogram.
struct TrialSummary {
  Scheme scheme = Scheme::random_distinct;
  std::uint32_t n = 0;
  std::uint64_t m = 0;
  std::uint32_t d = 0;
  std::vector<std::uint64_t> counts;  // counts[i] = bins with load i

  static TrialSummary of(const LoadState& state, Scheme scheme, std::uint32_t d);
  std::uint32_t max_load() const noexcept;
};

/// Sufficient statistics for one load value across trials. Sums are exact
/// integers; a trial without bins at this load contributes 0.
struct LoadAccumulator {
  std::uint64_t min = 0;
  std::uint64_t max = 0;
  std::uint64_t sum = 0;
  unsigned __int128 sum_sq = 0;

  bool operator==(const LoadAccumulator&) const = default;
};

/// Per-load and max-load statistics across trials of one configuration.
/// Everything derived is a function of exact integer sums, so the result is
/// independent of the order in which trials are added or merged.
class TrialAggregate {
 public:
  TrialAggregate() = default;
  TrialAggregate(Scheme scheme, std::uint32_t n, std::uint64_t m, std::uint32_t d);

  void add(const TrialSummary& row);
  void merge(const TrialAggregate& other);

  Scheme scheme() const noexcept { return scheme_; }
  std::uint32_t n() const noexcept { return n_; }
  std::uint64_t m() const noexcept { return m_; }
  std::uint32_t d() const noexcept { return d_; }
  std::uint64_t trials() const noexcept { return trials_; }
  /// Highest load seen in any trial.
  std::uint32_t max_load() const noexcept { return loads_.empty() ? 0 : static_cast<std::uint32_t>(loads_.size() - 1); }

  const LoadAccumulator& at(std::uint32_t load) const { return loads_.at(load); }
  double mean_count(std::uint32_t load) const;
  /// Sample standard deviation of the per-trial count (divisor trials - 1).
  double std_count(std::uint32_t load) const;

  /// Mean fraction of bins at each load 0..max_load.
  Eigen::ArrayXd fractions() const;
  /// tail(i) = mean fraction of bins with load at least i, i = 0..max_load.
  Eigen::ArrayXd tail() const;
  /// Fraction of trials whose maximum load equals each observed value.
  std::map<std::uint32_t, double> max_load_distribution() const;
  const std::map<std::uint32_t, std::uint64_t>& max_load_counts() const noexcept { return max_hist_; }

  bool operator==(const TrialAggregate&) const = default;

 private:
  void widen(std::size_t loads);

  Scheme scheme_ = Scheme::random_distinct;
  std::uint32_t n_ = 0;
  std::uint64_t m_ = 0;
  std::uint32_t d_ = 0;
  std::uint64_t trials_ = 0;
  std::vector<LoadAccumulator> loads_;
  std::map<std::uint32_t, std::uint64_t> max_hist_;
};

/// Throws std::domain_error on empty input or mixed configurations.
TrialAggregate aggregate(std::span<const TrialSummary> rows);

struct Comparison {
  /// |fraction_a - fraction_b| per load, padded with zeros to the longer one.
  Eigen::ArrayXd load_diff;
  /// |tail_a - tail_b| per level i >= 0.
  Eigen::ArrayXd tail_diff;
  /// |tail - reference x_i| per level i = 1..K, when a reference is given.
  std::optional<Eigen::ArrayXd> a_vs_reference;
  std::optional<Eigen::ArrayXd> b_vs_reference;

  double max_load_diff() const { return load_diff.size() ? load_diff.maxCoeff() : 0.0; }
  double max_tail_diff() const { return tail_diff.size() ? tail_diff.maxCoeff() : 0.0; }
};

/// `reference` holds fluid tail fractions x_0..x_K at the matching time.
Comparison compare(const TrialAggregate& a, const TrialAggregate& b,
                   const std::optional<Eigen::VectorXd>& reference = std::nullopt);

}  // namespace dhash

#endif  // DHASH_STATS_HPP
