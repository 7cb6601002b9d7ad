#pragma once

#include <utility>
#include <vector>

#include "wgsc/divergence.hpp"
#include "wgsc/surfaces.hpp"

namespace wgsc {

enum class SurfaceMethod { Auto, Exact, Shell };

struct TraceOptions {
  QuadratureOptions volume;
  SurfaceMethod surface_method = SurfaceMethod::Auto;  // Auto: exact when a parametrization exists
  SurfaceQuadrature surface;
  ShellOptions shell;
  double floor = kDefaultFloor;
};

/// Trace of a continuous field on {G = 0}: the restriction of its evaluator.
ScalarField trace(const LevelSetSurface& surface, const ScalarField& f);

/// Points on the surface obtained by projecting Gaussian samples (hyperplane:
/// orthogonal projection; ellipsoid: radial scaling; custom: Newton steps
/// along grad G).
std::vector<Point> surface_points(const GaussianModel& model, const LevelSetSurface& surface, std::size_t count,
                                  std::uint64_t seed);

/// max |Tr(f g) - Tr(f) Tr(g)| over the points.
double trace_product_deviation(const LevelSetSurface& surface, const ScalarField& f, const ScalarField& g,
                               const std::vector<Point>& points);

/// Surface integrals of several integrands against rho, by the method the
/// options select.
std::vector<IntegralEstimate> surface_integral_multi(const GaussianModel& model, const LevelSetSurface& surface,
                                                     std::size_t count, const MultiIntegrand& fn,
                                                     const TraceOptions& opts);

/// int_{G<0} (d_k phi + phi d_k log w - phi y_k) dnu
///   = int_{G=0} Tr(phi d_k G) w / |grad G| drho (0-based k).
TraceReport check_gauss_green(const GaussianModel& model, const Weight& weight, const LevelSetSurface& surface,
                              const ScalarField& phi, int k, const TraceOptions& opts);

/// The same identity for the Gaussian measure alone, computed without any
/// weight object.
TraceReport check_gauss_green_gaussian(const GaussianModel& model, const LevelSetSurface& surface,
                                       const ScalarField& phi, int k, const TraceOptions& opts);

/// int_{G<0} div_nu Phi dnu = int_{G=0} <Tr Phi, grad G> w / |grad G| drho.
TraceReport check_vector_gauss_green(const GaussianModel& model, const Weight& weight,
                                     const LevelSetSurface& surface, const VectorField& phi,
                                     const TraceOptions& opts);

/// First: int_{G<0} (q phi|phi|^{q-2} <grad phi, grad G> + |phi|^q div_nu grad G) dnu
///          = int_{G=0} |phi|^q |grad G| w drho.
/// Second: the same with N = grad G / |grad G| in place of grad G, and
///          int_{G=0} |phi|^q w drho on the right.
/// For q < 2 the factor phi|phi|^{q-2} is sign(phi)|phi|^{q-1}; points with
/// phi = 0 are flagged.
std::pair<TraceReport, TraceReport> check_trace_q_identities(const GaussianModel& model, const Weight& weight,
                                                             const LevelSetSurface& surface, const ScalarField& phi,
                                                             double q, const TraceOptions& opts);

/// (int_{G=0} |Tr phi|^q w drho)^{1/q} for each q.
std::vector<IntegralEstimate> trace_lq_norms(const GaussianModel& model, const Weight& weight,
                                             const LevelSetSurface& surface, const ScalarField& phi,
                                             const std::vector<double>& q_list, const TraceOptions& opts);

}  // namespace wgsc
