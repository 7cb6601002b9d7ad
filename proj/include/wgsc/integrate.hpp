#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgsc/fields.hpp"
#include "wgsc/gaussian.hpp"

namespace wgsc {

class Weight;

enum class Method { MonteCarlo, GaussHermite, Exact };

std::string to_string(Method m);
/// Accepts "mc", "gh", "gauss_hermite" and "exact".
Method method_from_string(const std::string& s);

struct IntegralEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for deterministic quadrature
  Method method = Method::MonteCarlo;
  std::size_t n_eval = 0;
  std::size_t dropped = 0;  // points where an integrand was NaN-flagged
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

struct QuadratureOptions {
  Method method = Method::MonteCarlo;
  std::size_t budget = 1'000'000;  // MC sample count
  std::uint64_t seed = 1;
  int gh_nodes = 20;  // per axis
  /// Composite Gauss-Legendre panels for the normal direction of half-space
  /// rules.
  int halfspace_panels = 24;
};

inline constexpr int kMaxGhDim = 8;
inline constexpr int kMaxGhNodes = 20;
inline constexpr std::size_t kMaxGhTensor = 20'000'000;
inline constexpr std::size_t kMinMcBudget = 1000;

/// Integrand producing `count` values at one point. A NaN in any slot marks
/// the point as singular: it is dropped from every estimate.
using MultiIntegrand = std::function<void(const Point&, std::span<double>)>;

struct MultiEstimate {
  std::vector<IntegralEstimate> estimates;
  /// max_i |term_i| / sum_i |term_i| per integrand (MC only); a large value
  /// means a single sample dominates the sum.
  std::vector<double> max_share;
};

/// Integrals of several integrands against mu, on one shared sample stream or
/// one shared quadrature grid.
MultiEstimate integrate_mu_multi(const GaussianModel& model, std::size_t count, const MultiIntegrand& fn,
                                 const QuadratureOptions& opts);

/// Same against nu = w mu: every value is multiplied by w at the point. MC
/// attaches a heavy-tail warning when max w / mean w exceeds 1e3.
MultiEstimate integrate_nu_multi(const GaussianModel& model, const Weight& weight, std::size_t count,
                                 const MultiIntegrand& fn, const QuadratureOptions& opts);

IntegralEstimate integrate_mu(const GaussianModel& model, const ScalarField& integrand,
                              const QuadratureOptions& opts);
IntegralEstimate integrate_nu(const GaussianModel& model, const Weight& weight, const ScalarField& integrand,
                              const QuadratureOptions& opts);

/// Integrals over the half-space {<a, y> < c} against mu. MC multiplies by
/// the indicator; Gauss-Hermite uses a composite Gauss-Legendre rule on
/// [-12, c/|a|] in the normal direction times a tensor Gauss-Hermite rule in
/// an orthonormal basis of the complement.
MultiEstimate integrate_halfspace_multi(const GaussianModel& model, const Vector& normal, double offset,
                                        std::size_t count, const MultiIntegrand& fn,
                                        const QuadratureOptions& opts);

/// Orthonormal basis (columns) of the orthogonal complement of a.
Matrix complement_basis(const Vector& a);

}  // namespace wgsc
