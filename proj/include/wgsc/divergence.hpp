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

struct DivergenceResult {
  std::string field_label;
  ScalarField div_nu;
  ScalarField div_mu;
  ScalarField drift_term;  // <Phi, grad log w>
};

/// Gaussian divergence sum_k (d_k phi_k - phi_k y_k).
ScalarField div_mu(const GaussianModel& model, const VectorField& phi);
/// div_nu = div_mu + <Phi, grad log w>.
DivergenceResult div_nu(const GaussianModel& model, const Weight& weight, const VectorField& phi);

/// grad f as a vector field; its Jacobian is the Hessian of f.
VectorField gradient_field(const ScalarField& f, int dim);
VectorField constant_vector_field(const Vector& c);
/// grad G / |grad G|, with Jacobian
/// d_j N_k = d_jk G / |grad G| - d_k G (grad G . hess G e_j) / |grad G|^3.
VectorField normalized_gradient_field(const ScalarField& g, int dim);

/// int d_h f dnu = int f (y_h - d_h log w) dnu (0-based h).
IdentityReport check_ibp(const GaussianModel& model, const Weight& weight, const ScalarField& f, int h,
                         const QuadratureOptions& opts, double floor = kDefaultFloor);

/// int (f y_h - f d_h log w - d_h f)(g y_k - g d_k log w - d_k g) dnu
///   = delta_hk int fg dnu - int fg d_h d_k log w dnu + int d_k f d_h g dnu.
/// Throws when the weight has no analytic Hessian.
IdentityReport bilinear_identity_check(const GaussianModel& model, const Weight& weight, const ScalarField& f,
                                       const ScalarField& g, int h, int k, const QuadratureOptions& opts,
                                       double floor = kDefaultFloor);

/// int (div_nu Phi)^2 dnu = int sum_ij (delta_ij - d_ij log w) phi_i phi_j dnu
///   + int trace((grad Phi)^2) dnu. Throws without an analytic Hessian.
IdentityReport energy_identity_check(const GaussianModel& model, const Weight& weight, const VectorField& phi,
                                     const QuadratureOptions& opts, double floor = kDefaultFloor);

/// int <grad f, Phi> dnu = -int f div_nu Phi dnu.
IdentityReport adjointness_check(const GaussianModel& model, const Weight& weight, const ScalarField& f,
                                 const VectorField& phi, const QuadratureOptions& opts,
                                 double floor = kDefaultFloor);

/// ||div_nu Phi||_{L^2(nu)} <= max(sqrt C, 1) ||Phi||_{W^{1,2}(nu)}, with a
/// 3 sigma slack on the estimates.
IdentityReport l2_bound_check(const GaussianModel& model, const Weight& weight, const VectorField& phi, double C,
                              const QuadratureOptions& opts);

// ---------------------------------------------------------------------------
// Screening of the uniform bound I - hess log w <= C.

struct Condition41Candidate {
  double C = 0.0;
  bool violated = false;
  Point point;              // whitened
  double ambient_norm = 0.0;
  double eigenvalue = 0.0;  // lambda_max(I - hess log w) at point
  bool in_witness_set = false;
  /// With xi_i = (x, v_i): C |xi|^2 minus the quadratic form, and the claimed
  /// upper bound (C - 1) ||x||^2 - 12 for it.
  double gap_at_ambient_direction = 0.0;
  double claimed_gap_bound = 0.0;
  nlohmann::json to_json() const;
};

struct Condition41Result {
  double c_max_estimate = 0.0;  // max over sampled points of lambda_max(I - hess log w)
  Point argmax;
  std::size_t sampled = 0;
  std::size_t dropped = 0;
  double radius = 0.0;
  std::size_t witness_set_trials = 0;
  std::size_t witness_set_hits = 0;
  std::vector<Condition41Candidate> candidates;
  nlohmann::json to_json() const;
};

/// lambda_max(I - hess log w(p)).
double condition_41_eigenvalue(const Weight& weight, const Point& p);

/// Membership in {||x||^2 < 2^{-1/2} sum_i 4^{-i} (x, v_i)^2} intersected with
/// the ambient ball of the given radius.
bool in_condition41_set(const GaussianModel& model, const Point& p, double radius);

/// Estimates the sup of lambda_max(I - hess log w) on sample_budget points,
/// then searches the ambient ball of `radius` for a violation of each
/// candidate C: first by rejection sampling of the set above, then by radial
/// contraction from the best sampled direction.
Condition41Result condition_41_screen(const GaussianModel& model, const Weight& weight, std::size_t sample_budget,
                                      std::uint64_t seed, const std::vector<double>& candidates = {},
                                      double radius = 0.5);

}  // namespace wgsc
