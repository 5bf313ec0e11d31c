#pragma once

#include <cstddef>
#include <vector>

namespace bandtrace {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre rule with `order` points on [-1, 1] (Newton iteration on P_n).
QuadratureRule gauss_legendre(int order);

// Composite Gauss-Legendre: `panels` equal panels on [a, b], `order` points each.
// Nodes come out in ascending order.
QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order);

}  // namespace bandtrace
