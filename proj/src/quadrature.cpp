#include "bandtrace/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bandtrace {

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  const int n = order;
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order) {
  if (panels < 1) throw std::invalid_argument("composite_gauss_legendre: panels must be >= 1");
  if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: empty interval");
  const QuadratureRule ref = gauss_legendre(order);
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
  rule.weights.reserve(static_cast<std::size_t>(panels) * order);
  for (int p = 0; p < panels; ++p) {
    // Panel ends computed from a and b directly so the last panel ends exactly at b.
    const double lo = a + (b - a) * p / panels;
    const double hi = (p + 1 == panels) ? b : a + (b - a) * (p + 1) / panels;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < order; ++i) {
      rule.nodes.push_back(mid + half * ref.nodes[i]);
      rule.weights.push_back(half * ref.weights[i]);
    }
  }
  return rule;
}

}  // namespace bandtrace
