#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgsc/fields.hpp"
#include "wgsc/integrate.hpp"
#include "wgsc/report.hpp"
#include "wgsc/weights.hpp"

namespace wgsc {

enum class SurfaceKind { Hyperplane, Ellipsoid, Custom };

/// Level set {G = 0} bounding the region {G < 0}.
///
/// Hyperplanes are given in whitened coordinates, G = <a, y> - c. Spheres of
/// the ambient norm, G = ||x||_X - r, become the ellipsoid
/// sum_i lambda_i y_i^2 = r^2 in whitened coordinates. Both carry an exact
/// parametrization.
class LevelSetSurface {
 public:
  static LevelSetSurface hyperplane(const GaussianModel& model, const Vector& normal, double offset,
                                    double delta = 0.1);
  static LevelSetSurface sphere(const GaussianModel& model, double radius = 1.0, double delta = 0.1);
  /// ||f||_{L^2(0,1)} - 1 for the Karhunen-Loeve path; the basis is
  /// L^2-orthogonal with squared norms lambda_i, so this is the unit sphere
  /// of the ambient norm.
  static LevelSetSurface l2_path_sphere(const GaussianModel& model, double delta = 0.1);
  static LevelSetSurface custom(ScalarField g, double delta, std::string label = "custom");

  SurfaceKind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  const ScalarField& G() const { return g_; }
  double delta() const { return delta_; }
  bool has_exact() const { return kind_ != SurfaceKind::Custom; }
  bool inside(const Point& p) const { return g_(p) < 0.0; }

  const Vector& normal() const { return normal_; }
  double offset() const { return offset_; }
  double radius() const { return radius_; }

  nlohmann::json to_json() const;

 private:
  LevelSetSurface(SurfaceKind kind, ScalarField g, double delta, std::string label);

  SurfaceKind kind_;
  ScalarField g_;
  double delta_;
  std::string label_;
  Vector normal_;
  double offset_ = 0.0;
  double radius_ = 0.0;
  std::vector<double> spectrum_;
};

struct SurfaceQuadrature {
  int gh_nodes = 20;      // tangential Gauss-Hermite nodes (hyperplanes)
  int sphere_order = 24;  // polar Gauss-Legendre order (ellipsoids)
  int radial_nodes = 48;  // radial nodes for ellipsoid interiors
};

/// Integral of the integrand against the Gaussian-weighted Hausdorff measure
/// rho on {G = 0}, by the exact parametrization (method tag "exact").
IntegralEstimate surface_integral_exact(const GaussianModel& model, const LevelSetSurface& surface,
                                        const ScalarField& integrand, const SurfaceQuadrature& q = {});

/// Several integrands over the same nodes.
std::vector<IntegralEstimate> surface_integral_exact_multi(const GaussianModel& model,
                                                           const LevelSetSurface& surface, std::size_t count,
                                                           const MultiIntegrand& fn,
                                                           const SurfaceQuadrature& q = {});

/// |grad G| at surface nodes below this value is treated as underflow.
inline constexpr double kGradientUnderflow = 1e-300;
inline constexpr std::size_t kMinBandHits = 1000;

struct ShellOptions {
  std::vector<double> fractions{1.0, 0.5, 0.25, 0.125};  // epsilon = delta * fraction
  std::size_t budget = 1'000'000;
  std::uint64_t seed = 1;
};

struct ShellEstimate {
  IntegralEstimate value;  // extrapolated to epsilon = 0
  std::vector<double> epsilon;
  std::vector<IntegralEstimate> rungs;
  std::vector<std::size_t> hits;
  double slope = 0.0;  // coefficient of epsilon^2
  /// The two smallest rungs differ by no more than the fitted epsilon^2
  /// increment plus 3 sigma.
  bool epsilon_consistent = true;
  nlohmann::json to_json() const;
};

/// Co-area estimator: A(eps) = (1 / 2 eps) int 1{|G| < eps} F |grad G| dmu
/// on an independent stream per epsilon, fitted by weighted least squares to
/// a + b eps^2. Throws std::runtime_error("band undersampled") when a rung
/// has fewer than 1000 band hits.
ShellEstimate surface_integral_shell(const GaussianModel& model, const LevelSetSurface& surface,
                                     const ScalarField& integrand, const ShellOptions& opts);

/// Shell estimates for several integrands and gradient projections on shared
/// samples. projections[j] = m restricts |grad G| to the first m whitened
/// coordinates (m = 0 means no restriction). Result index is
/// j * count + integrand index.
std::vector<ShellEstimate> surface_integral_shell_multi(const GaussianModel& model,
                                                        const LevelSetSurface& surface, std::size_t count,
                                                        const MultiIntegrand& fn,
                                                        const std::vector<int>& projections,
                                                        const ShellOptions& opts);

/// Volume integrals over {G < 0}. Gauss-Hermite uses the half-space rule for
/// hyperplanes and a radial Gauss-Legendre times sphere rule for ellipsoids;
/// Monte Carlo multiplies by the indicator.
MultiEstimate integrate_region_multi(const GaussianModel& model, const LevelSetSurface& surface, std::size_t count,
                                     const MultiIntegrand& fn, const QuadratureOptions& opts,
                                     const SurfaceQuadrature& q = {});

struct Hypothesis2Report {
  IntegralEstimate interior_mass;  // mu(G < 0)
  std::vector<double> q_list;
  std::vector<MomentLadder> moments;      // int_{|G| < delta} |grad G|^{-q} dmu
  std::vector<double> exact;              // closed forms (hyperplanes), NaN otherwise
  bool pass = false;
  nlohmann::json to_json() const;
};

Hypothesis2Report check_hypothesis2(const GaussianModel& model, const LevelSetSurface& surface,
                                    const std::vector<double>& q_list, std::size_t budget, std::uint64_t seed);

/// rho^{F_1}(A) <= rho^{F_2}(A) for the coordinate subspaces of the first m1
/// and m2 whitened coordinates, on shared samples.
IdentityReport rho_monotonicity_check(const GaussianModel& model, const LevelSetSurface& surface,
                                      const ScalarField& indicator, int m1, int m2, const ShellOptions& opts);

/// Standard normal density and distribution function.
double normal_pdf(double t);
double normal_cdf(double t);

}  // namespace wgsc
