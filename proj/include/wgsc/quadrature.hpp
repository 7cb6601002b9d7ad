#pragma once

#include <functional>
#include <vector>

#include "wgsc/gaussian.hpp"

namespace wgsc {

/// One-dimensional quadrature rule.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for the standard normal weight exp(-t^2/2)/sqrt(2 pi)
/// (probabilists' convention); the weights sum to one. Exact for polynomials
/// of degree <= 2n - 1.
Rule1D gauss_hermite(int n);

/// Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre rule: `panels` equal panels on [a, b], each with
/// `order` nodes.
Rule1D composite_legendre(int panels, int order, double a, double b);

/// Visits every node of the tensor grid of `rules` (one rule per axis) with
/// its product weight. The callback receives the node coordinates and the
/// weight.
void for_each_tensor_node(const std::vector<Rule1D>& rules,
                          const std::function<void(const Vector&, double)>& fn);

/// Product of the rule sizes, saturating at SIZE_MAX.
std::size_t tensor_size(const std::vector<Rule1D>& rules);

/// Quadrature on the unit sphere S^{m-1} in R^m (m >= 2) by hyperspherical
/// coordinates: Gauss-Legendre in the polar angles, the trapezoidal rule in
/// the azimuth. Weights include the angular Jacobian and sum to the surface
/// area of S^{m-1}.
struct SphereRule {
  std::vector<Vector> nodes;
  std::vector<double> weights;
};
SphereRule sphere_rule(int m, int order);

}  // namespace wgsc
