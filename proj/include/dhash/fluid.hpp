#ifndef DHASH_FLUID_HPP
#define DHASH_FLUID_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhash::fluid {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when the truncation level K is too small for the requested horizon.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an integration step breaks 1 = x_0 >= x_1 >= ... >= x_K >= 0.
class MonotonicityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  double step = 1e-3;
  int truncation = 16;
  double floor = 1e-12;
  double monotone_slack = 1e-12;
  /// Keep every `record_every`-th grid point (the last one is always kept).
  int record_every = 1;
};

/// Tail fractions x_0..x_K on a time grid. Column j of `x` holds the state at
/// times[j]; x(0, j) is always 1.
template <typename Scalar>
struct Trajectory {
  int d = 0;
  int truncation = 0;
  Scalar step = 0;
  std::vector<Scalar> times;
  Matrix<Scalar> x;

  Vector<Scalar> final_state() const { return x.col(x.cols() - 1); }
  Scalar final_time() const { return times.back(); }
};

/// Right-hand side of dx_i/dt = x_{i-1}^d - x_i^d with x_0 pinned at 1 and
/// x_{K+1} taken as 0.
template <typename Scalar>
void bins_rhs(const Vector<Scalar>& x, int d, Vector<Scalar>& dx) {
  const Eigen::Index k = x.size() - 1;
  Vector<Scalar> p = x.array().pow(Scalar(d));
  dx.resize(x.size());
  dx(0) = 0;
  dx.tail(k) = p.head(k) - p.tail(k);
}

/// ds_i/dt = lambda (s_{i-1}^d - s_i^d) - (s_i - s_{i+1}), s_0 pinned at 1,
/// s_{K+1} taken as 0.
template <typename Scalar>
void queues_rhs(const Vector<Scalar>& s, int d, Scalar lambda, Vector<Scalar>& ds) {
  const Eigen::Index k = s.size() - 1;
  Vector<Scalar> p = s.array().pow(Scalar(d));
  Vector<Scalar> next = Vector<Scalar>::Zero(s.size());
  next.head(k) = s.tail(k);
  ds.resize(s.size());
  ds.tail(k) = lambda * (p.head(k) - p.tail(k)) - (s.tail(k) - next.segment(1, k));
  ds(0) = 0;
}

/// Classical fourth-order Runge-Kutta over [0, horizon] for a pinned-x_0
/// system. `rhs(state, out)` evaluates the derivative.
template <typename Scalar, typename Rhs>
Trajectory<Scalar> integrate(Vector<Scalar> state, int d, Scalar horizon, const Options& opt, Rhs&& rhs) {
  if (!(opt.step > 0)) throw std::domain_error("fluid: step must be positive");
  if (!(horizon > 0)) throw std::domain_error("fluid: horizon must be positive");
  if (opt.truncation < 1) throw std::domain_error("fluid: truncation must be at least 1");
  if (opt.record_every < 1) throw std::domain_error("fluid: record_every must be at least 1");

  const Scalar h_nominal = Scalar(opt.step);
  const auto steps = static_cast<std::int64_t>(std::ceil(static_cast<double>(horizon / h_nominal) - 1e-9));
  const Scalar h = horizon / Scalar(steps);
  const Eigen::Index dim = state.size();

  Trajectory<Scalar> traj;
  traj.d = d;
  traj.truncation = opt.truncation;
  traj.step = h;
  const std::int64_t kept = steps / opt.record_every + 2;
  traj.x.resize(dim, kept);
  traj.times.reserve(static_cast<std::size_t>(kept));

  Eigen::Index col = 0;
  auto record = [&](Scalar t) {
    traj.x.col(col++) = state;
    traj.times.push_back(t);
  };
  record(Scalar(0));

  Vector<Scalar> k1(dim), k2(dim), k3(dim), k4(dim), probe(dim);
  const Scalar slack = Scalar(opt.monotone_slack);
  for (std::int64_t i = 1; i <= steps; ++i) {
    rhs(state, k1);
    probe = state + (h / 2) * k1;
    rhs(probe, k2);
    probe = state + (h / 2) * k2;
    rhs(probe, k3);
    probe = state + h * k3;
    rhs(probe, k4);
    state += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    state(0) = Scalar(1);

    for (Eigen::Index j = 1; j < dim; ++j) {
      if (state(j) > state(j - 1) + slack || state(j) < -slack)
        throw MonotonicityError("fluid: tail monotonicity violated at level " + std::to_string(j) +
                                " on step " + std::to_string(i));
    }
    if (i % opt.record_every == 0 || i == steps) record(h * Scalar(i));
  }
  traj.x.conservativeResize(Eigen::NoChange, col);

  using std::abs;
  if (abs(state(dim - 1)) > Scalar(opt.floor))
    throw TruncationError("fluid: x_K(T) = " + std::to_string(static_cast<double>(state(dim - 1))) +
                          " exceeds the floor; increase the truncation level K");
  return traj;
}

/// Balls-and-bins fluid limit from the empty start, x_i(0) = 0 for i >= 1.
template <typename Scalar = double>
Trajectory<Scalar> integrate_bins(int d, Scalar horizon, const Options& opt = {}) {
  if (d < 1) throw std::domain_error("fluid: d must be at least 1");
  Vector<Scalar> x0 = Vector<Scalar>::Zero(opt.truncation + 1);
  x0(0) = 1;
  return integrate<Scalar>(std::move(x0), d, horizon, opt,
                           [d](const Vector<Scalar>& x, Vector<Scalar>& dx) { bins_rhs<Scalar>(x, d, dx); });
}

/// s_i = lambda^((d^i - 1)/(d - 1)) for i = 0..K.
template <typename Scalar = double>
Vector<Scalar> queue_fixed_point(int d, Scalar lambda, int truncation) {
  Vector<Scalar> s(truncation + 1);
  Scalar exponent = 0;
  Scalar power = 1;
  using std::pow;
  for (int i = 0; i <= truncation; ++i) {
    s(i) = pow(lambda, exponent);
    exponent += power;
    power *= Scalar(d);
  }
  return s;
}

/// Supermarket-model fluid limit. `initial` defaults to the empty system.
template <typename Scalar = double>
Trajectory<Scalar> integrate_queues(int d, Scalar lambda, Scalar horizon, const Options& opt = {},
                                    const Vector<Scalar>* initial = nullptr) {
  if (d < 1) throw std::domain_error("fluid: d must be at least 1");
  if (!(lambda > 0 && lambda < 1)) throw std::domain_error("fluid: lambda must lie in (0, 1)");
  Vector<Scalar> s0;
  if (initial != nullptr) {
    if (initial->size() != opt.truncation + 1)
      throw std::domain_error("fluid: initial state size must be K + 1");
    s0 = *initial;
  } else {
    s0 = Vector<Scalar>::Zero(opt.truncation + 1);
  }
  s0(0) = 1;
  return integrate<Scalar>(std::move(s0), d, horizon, opt, [d, lambda](const Vector<Scalar>& s, Vector<Scalar>& ds) {
    queues_rhs<Scalar>(s, d, lambda, ds);
  });
}

/// Expected time in system at the supermarket-model equilibrium, by Little's
/// law: (sum_{i>=1} lambda^((d^i-1)/(d-1))) / lambda, summed until a term
/// drops below `tolerance`.
double equilibrium_sojourn(int d, double lambda, double tolerance = 1e-15);

}  // namespace dhash::fluid

#endif  // DHASH_FLUID_HPP
