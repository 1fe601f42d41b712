#include "dhash/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dhash {

TrialSummary TrialSummary::of(const LoadState& state, Scheme scheme, std::uint32_t d) {
  return {scheme, state.n(), state.balls_placed, d, state.load_counts()};
}

std::uint32_t TrialSummary::max_load() const noexcept {
  std::size_t k = counts.size();
  while (k > 1 && counts[k - 1] == 0) --k;
  return k == 0 ? 0 : static_cast<std::uint32_t>(k - 1);
}

TrialAggregate::TrialAggregate(Scheme scheme, std::uint32_t n, std::uint64_t m, std::uint32_t d)
    : scheme_(scheme), n_(n), m_(m), d_(d) {}

void TrialAggregate::widen(std::size_t loads) {
  // Trials already folded in had no bins at the new loads.
  if (loads > loads_.size()) loads_.resize(loads, LoadAccumulator{});
}

void TrialAggregate::add(const TrialSummary& row) {
  if (row.scheme != scheme_ || row.n != n_ || row.m != m_ || row.d != d_)
    throw std::domain_error("aggregate: trial configuration does not match the aggregate");
  const std::uint32_t top = row.max_load();
  const bool first = trials_ == 0;
  widen(std::size_t{top} + 1);
  for (std::size_t l = 0; l < loads_.size(); ++l) {
    const std::uint64_t v = l < row.counts.size() ? row.counts[l] : 0;
    auto& acc = loads_[l];
    acc.min = first ? v : std::min(acc.min, v);
    acc.max = std::max(acc.max, v);
    acc.sum += v;
    acc.sum_sq += static_cast<unsigned __int128>(v) * v;
  }
  ++max_hist_[top];
  ++trials_;
}

void TrialAggregate::merge(const TrialAggregate& other) {
  if (other.trials_ == 0) return;
  if (trials_ == 0) {
    *this = other;
    return;
  }
  if (other.scheme_ != scheme_ || other.n_ != n_ || other.m_ != m_ || other.d_ != d_)
    throw std::domain_error("aggregate: cannot merge different configurations");
  const std::size_t width = std::max(loads_.size(), other.loads_.size());
  widen(width);
  for (std::size_t l = 0; l < width; ++l) {
    const LoadAccumulator rhs = l < other.loads_.size() ? other.loads_[l] : LoadAccumulator{};
    auto& acc = loads_[l];
    acc.min = std::min(acc.min, rhs.min);
    acc.max = std::max(acc.max, rhs.max);
    acc.sum += rhs.sum;
    acc.sum_sq += rhs.sum_sq;
  }
  for (const auto& [value, count] : other.max_hist_) max_hist_[value] += count;
  trials_ += other.trials_;
}

double TrialAggregate::mean_count(std::uint32_t load) const {
  if (load >= loads_.size() || trials_ == 0) return 0.0;
  return static_cast<double>(loads_[load].sum) / static_cast<double>(trials_);
}

double TrialAggregate::std_count(std::uint32_t load) const {
  if (load >= loads_.size() || trials_ < 2) return 0.0;
  const auto& acc = loads_[load];
  // N * S2 - S1^2 is exact in 128-bit arithmetic.
  using i128 = __int128;
  const i128 numer = static_cast<i128>(trials_) * static_cast<i128>(acc.sum_sq) -
                     static_cast<i128>(acc.sum) * static_cast<i128>(acc.sum);
  const long double denom = static_cast<long double>(trials_) * static_cast<long double>(trials_ - 1);
  return static_cast<double>(std::sqrt(static_cast<long double>(numer) / denom));
}

Eigen::ArrayXd TrialAggregate::fractions() const {
  Eigen::ArrayXd f(static_cast<Eigen::Index>(loads_.size()));
  const long double total = static_cast<long double>(trials_) * n_;
  for (std::size_t l = 0; l < loads_.size(); ++l)
    f(static_cast<Eigen::Index>(l)) = total == 0 ? 0.0 : static_cast<double>(loads_[l].sum / total);
  return f;
}

Eigen::ArrayXd TrialAggregate::tail() const {
  Eigen::ArrayXd t(static_cast<Eigen::Index>(loads_.size()));
  const long double total = static_cast<long double>(trials_) * n_;
  std::uint64_t running = 0;
  for (std::size_t l = loads_.size(); l-- > 0;) {
    running += loads_[l].sum;
    t(static_cast<Eigen::Index>(l)) = total == 0 ? 0.0 : static_cast<double>(running / total);
  }
  return t;
}

std::map<std::uint32_t, double> TrialAggregate::max_load_distribution() const {
  std::map<std::uint32_t, double> out;
  for (const auto& [value, count] : max_hist_)
    out[value] = static_cast<double>(count) / static_cast<double>(trials_);
  return out;
}

TrialAggregate aggregate(std::span<const TrialSummary> rows) {
  if (rows.empty()) throw std::domain_error("aggregate: no trials");
  const auto& first = rows.front();
  TrialAggregate agg(first.scheme, first.n, first.m, first.d);
  for (const auto& row : rows) agg.add(row);
  return agg;
}

namespace {

Eigen::ArrayXd padded_abs_diff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  const Eigen::Index len = std::max(a.size(), b.size());
  Eigen::ArrayXd pa = Eigen::ArrayXd::Zero(len);
  Eigen::ArrayXd pb = Eigen::ArrayXd::Zero(len);
  pa.head(a.size()) = a;
  pb.head(b.size()) = b;
  return (pa - pb).abs();
}

Eigen::ArrayXd against_reference(const Eigen::ArrayXd& tail, const Eigen::VectorXd& ref) {
  // Levels 1..K; missing simulated levels are zero.
  const Eigen::Index levels = ref.size() - 1;
  Eigen::ArrayXd out(levels);
  for (Eigen::Index i = 1; i <= levels; ++i) {
    const double sim = i < tail.size() ? tail(i) : 0.0;
    out(i - 1) = std::abs(sim - ref(i));
  }
  return out;
}

}  // namespace

Comparison compare(const TrialAggregate& a, const TrialAggregate& b, const std::optional<Eigen::VectorXd>& reference) {
  if (a.n() != b.n() || a.m() != b.m() || a.d() != b.d())
    throw std::domain_error("compare: aggregates differ in (n, m, d)");
  if (a.trials() == 0 || b.trials() == 0) throw std::domain_error("compare: empty aggregate");
  Comparison c;
  c.load_diff = padded_abs_diff(a.fractions(), b.fractions());
  c.tail_diff = padded_abs_diff(a.tail(), b.tail());
  if (reference) {
    if (reference->size() < 2) throw std::domain_error("compare: reference needs at least x_0 and x_1");
    c.a_vs_reference = against_reference(a.tail(), *reference);
    c.b_vs_reference = against_reference(b.tail(), *reference);
  }
  return c;
}

}  // namespace dhash
