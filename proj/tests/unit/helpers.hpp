#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "bandtrace/bands.hpp"
#include "bandtrace/fibre.hpp"
#include "bandtrace/quadrature.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

// sin(sqrt(mu) d) / (pi d) with its diagonal limit.
inline double sine_kernel(double mu, double d) {
  const double s = std::sqrt(mu);
  if (std::abs(d) < 1e-12) return s / kPi;
  return std::sin(s * d) / (kPi * d);
}

// Random real potential of order M with coefficients in the unit disc.
inline bandtrace::fibre::PeriodicPotential random_potential(std::mt19937_64& rng, int order) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::map<int, bandtrace::cplx> c;
  c[0] = u(rng);
  for (int m = 1; m <= order; ++m) {
    c[m] = {0.5 * u(rng), 0.5 * u(rng)};
    c[-m] = std::conj(c[m]);
  }
  return bandtrace::fibre::PeriodicPotential::from_coefficients(c, order);
}

// int_0^{2 pi} f on a fine composite Gauss rule.
template <class F>
double integrate_period(F&& f, int panels = 64) {
  const auto rule = bandtrace::composite_gauss_legendre(0.0, 2.0 * kPi, panels, 8);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
  return s;
}

// Independent high-cutoff eigenvalue oracle.
inline double oracle_eigenvalue(const bandtrace::fibre::PeriodicPotential& v, double k, int j) {
  return bandtrace::fibre::fibre_eigenvalues(v, bandtrace::fibre::reduce_quasi_momentum(k), 256)(j - 1);
}

inline bandtrace::bands::BandStructure cosine_bands(double e_max = 6.0) {
  return bandtrace::bands::group_genuine(
      bandtrace::bands::compute_bands(bandtrace::fibre::PeriodicPotential::cosine(1.0), e_max));
}

}  // namespace testing
