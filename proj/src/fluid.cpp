#include "dhash/fluid.hpp"

namespace dhash::fluid {

double equilibrium_sojourn(int d, double lambda, double tolerance) {
  if (d < 1) throw std::domain_error("equilibrium_sojourn: d must be at least 1");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::domain_error("equilibrium_sojourn: lambda must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw std::domain_error("equilibrium_sojourn: tolerance must be positive");

  // d = 1 is M/M/1: tail lambda^i, sojourn 1/(1 - lambda).
  double sum = 0.0;
  double exponent = 1.0;  // (d^i - 1)/(d - 1) at i = 1
  double power = 1.0;     // d^(i-1)
  for (int i = 1; i < 100000; ++i) {
    const double term = std::pow(lambda, exponent);
    sum += term;
    if (term < tolerance) break;
    power *= d;
    exponent += power;
  }
  return sum / lambda;
}

template Trajectory<double> integrate_bins<double>(int, double, const Options&);
template Trajectory<double> integrate_queues<double>(int, double, double, const Options&, const Vector<double>*);

}  // namespace dhash::fluid
