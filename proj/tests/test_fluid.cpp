#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dhash/fluid.hpp"

using namespace dhash::fluid;

TEST_CASE("d=1 has the closed form 1 - e^-T") {
  const auto traj = integrate_bins<double>(1, 1.0);
  CHECK(std::abs(traj.final_state()(1) - (1 - std::exp(-1.0))) < 1e-6);
  CHECK(traj.final_time() == doctest::Approx(1.0));
}

TEST_CASE("d=3, T=1 matches a 30-digit Taylor-series integration") {
  // Reference computed independently with mpmath.odefun on the truncated system.
  const double expected[] = {0.8230405355016096, 0.17645176067669366, 0.0005077038178315727};
  const auto x = integrate_bins<double>(3, 1.0).final_state();
  for (int i = 0; i < 3; ++i) {
    CAPTURE(i);
    CHECK(std::abs(x(i + 1) - expected[i]) < 1e-10);
  }
}

TEST_CASE("boundary and shape invariants") {
  Options opt;
  opt.record_every = 10;
  for (int d : {2, 3, 4}) {
    const auto traj = integrate_bins<double>(d, 2.0, opt);
    CHECK(traj.x.rows() == opt.truncation + 1);
    CHECK(static_cast<std::size_t>(traj.x.cols()) == traj.times.size());
    for (Eigen::Index c = 0; c < traj.x.cols(); ++c) {
      CHECK(traj.x(0, c) == 1.0);
      for (Eigen::Index i = 1; i < traj.x.rows(); ++i) CHECK(traj.x(i, c) <= traj.x(i - 1, c) + 1e-12);
    }
  }
}

TEST_CASE("mass: sum of tails equals balls per bin") {
  for (int d : {2, 3, 5}) {
    for (double T : {0.5, 1.0, 3.0}) {
      const auto x = integrate_bins<double>(d, T).final_state();
      CHECK(std::abs(x.tail(x.size() - 1).sum() - T) < 1e-9);
    }
  }
}

TEST_CASE("halving the step changes nothing beyond 1e-8") {
  Options coarse, fine;
  fine.step = coarse.step / 2;
  const auto a = integrate_bins<double>(3, 1.0, coarse).final_state();
  const auto b = integrate_bins<double>(3, 1.0, fine).final_state();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("long double agrees with double") {
  const auto a = integrate_bins<double>(3, 1.0).final_state();
  const auto b = integrate_bins<long double>(3, 1.0L).final_state();
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(static_cast<double>(b(i)) - a(i)) < 1e-12);
}

TEST_CASE("a truncation level too low is reported") {
  Options opt;
  opt.truncation = 2;
  CHECK_THROWS_AS(integrate_bins<double>(1, 1.0, opt), TruncationError);
  opt.truncation = 3;
  CHECK_THROWS_AS(integrate_bins<double>(3, 4.0, opt), TruncationError);
}

TEST_CASE("an unstable step is reported as a monotonicity violation") {
  Options opt;
  opt.step = 4.0;
  CHECK_THROWS_AS(integrate_bins<double>(3, 8.0, opt), MonotonicityError);
}

TEST_CASE("bad arguments") {
  CHECK_THROWS_AS(integrate_bins<double>(0, 1.0), std::domain_error);
  CHECK_THROWS_AS(integrate_bins<double>(3, 0.0), std::domain_error);
  Options opt;
  opt.step = 0;
  CHECK_THROWS_AS(integrate_bins<double>(3, 1.0, opt), std::domain_error);
  CHECK_THROWS_AS(integrate_queues<double>(3, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(integrate_queues<double>(3, 0.0, 1.0), std::domain_error);
}

TEST_CASE("queue fixed point") {
  const auto s = queue_fixed_point<double>(3, 0.9, 4);
  CHECK(s(0) == 1.0);
  CHECK(s(1) == doctest::Approx(0.9));
  CHECK(s(2) == doctest::Approx(std::pow(0.9, 4)));
  CHECK(s(3) == doctest::Approx(std::pow(0.9, 13)));
  CHECK(s(4) == doctest::Approx(std::pow(0.9, 40)));
}

TEST_CASE("supermarket model converges to its fixed point") {
  Options opt;
  opt.step = 1e-2;
  opt.record_every = 1000;
  const auto s = integrate_queues<double>(3, 0.9, 200.0, opt).final_state();
  CHECK(std::abs(s(1) - 0.9) < 1e-4);
  CHECK(std::abs(s(2) - 0.6561) < 1e-3);
}

TEST_CASE("the fixed point is stationary") {
  for (int d : {2, 3, 4}) {
    for (double lambda : {0.5, 0.9}) {
      Options opt;
      opt.truncation = 24;
      const Vector<double> start = queue_fixed_point<double>(d, lambda, opt.truncation);
      const auto traj = integrate_queues<double>(d, lambda, 1.0, opt, &start);
      CHECK((traj.final_state() - start).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  Options opt;
  const Vector<double> wrong = Vector<double>::Zero(3);
  CHECK_THROWS_AS(integrate_queues<double>(3, 0.9, 1.0, opt, &wrong), std::domain_error);
}

TEST_CASE("equilibrium sojourn") {
  CHECK(std::abs(equilibrium_sojourn(3, 0.9) - 2.0279) < 1e-3);
  CHECK(std::abs(equilibrium_sojourn(4, 0.9) - 1.7778) < 1e-3);
  CHECK(std::abs(equilibrium_sojourn(3, 1e-6) - 1.0) < 1e-9);
  // M/M/1 when each job sees one queue.
  CHECK(equilibrium_sojourn(1, 0.5) == doctest::Approx(2.0));

  // Same quantity from the integrated tails via Little's law.
  Options opt;
  opt.step = 1e-2;
  opt.record_every = 1000;
  const auto s = integrate_queues<double>(3, 0.9, 300.0, opt).final_state();
  CHECK(std::abs(s.tail(s.size() - 1).sum() / 0.9 - equilibrium_sojourn(3, 0.9)) < 1e-4);

  CHECK_THROWS_AS(equilibrium_sojourn(3, 1.0), std::domain_error);
  CHECK_THROWS_AS(equilibrium_sojourn(3, 1.5), std::domain_error);
}
