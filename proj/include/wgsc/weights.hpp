#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgsc/fields.hpp"
#include "wgsc/gaussian.hpp"
#include "wgsc/integrate.hpp"

namespace wgsc {

/// Integrability exponents: w in W^{1,s}, log w in W^{2,t}, t > s'.
struct Exponents {
  double s = 2.0;
  double t = 4.0;

  double s_conj() const { return s / (s - 1.0); }
  /// Smallest Sobolev exponent p the calculus admits: t / (t - s').
  double p_min() const { return t / (t - s_conj()); }
  /// t >= 2 s', needed for the L^2 divergence bound.
  bool l2_theory() const { return t >= 2.0 * s_conj(); }
  void validate() const;
};

/// Positive weight w = exp(log w) defining nu = w mu.
///
/// Both w and log w are kept as separate evaluators so that the relation
/// w = exp(log w) is checkable. The singular set of log w is the singular set
/// of the weight.
class Weight {
 public:
  Weight(std::string kind, ScalarField w, ScalarField log_w, Exponents exponents, nlohmann::json params = {});

  const std::string& kind() const { return kind_; }
  const Exponents& exponents() const { return exponents_; }
  const nlohmann::json& params() const { return params_; }

  double w(const Point& p) const { return w_(p); }
  double log_w(const Point& p) const { return log_w_(p); }
  Vector grad_log_w(const Point& p) const { return log_w_.gradient(p); }
  Matrix hess_log_w(const Point& p) const;
  bool has_hessian() const { return log_w_.has_hessian(); }
  bool is_singular(const Point& p) const { return log_w_.is_singular(p); }

  const ScalarField& w_field() const { return w_; }
  const ScalarField& log_w_field() const { return log_w_; }

  /// Warning text when p < p_min, empty otherwise.
  std::string exponent_warning(double p) const;

  nlohmann::json to_json() const;
  /// {"kind": "unit" | "gaussian_type" | "lq_norm" | "sup_norm_kl" | "square_norm", ...,
  ///  "s": ..., "t": ...}
  static Weight from_json(const nlohmann::json& spec, const GaussianModel& model);

 private:
  std::string kind_;
  ScalarField w_;
  ScalarField log_w_;
  Exponents exponents_;
  nlohmann::json params_;
};

Weight unit_weight(const GaussianModel& model);
/// w(x) = exp(lambda (x, x)_X); d_i log w = 2 lambda lambda_i y_i.
Weight gaussian_type_weight(const GaussianModel& model, double lambda, Exponents ex = {});
/// w(x) = exp(scale ||x||_q).
Weight lq_norm_weight(const GaussianModel& model, double q, double scale = 1.0, Exponents ex = {});
/// w(f) = exp(||f||_inf) for the Karhunen-Loeve path with coefficients y.
Weight sup_norm_kl_weight(const GaussianModel& model, int grid_size, Exponents ex = {});
/// w(x) = (x, x)_X^2. Singular at the origin. |grad log w|^t is integrable
/// only for t < dim at finite truncation, so the default t is 3.
Weight square_norm_weight(const GaussianModel& model, Exponents ex = {2.0, 3.0});

// ---------------------------------------------------------------------------
// Integrability screening.

/// An MC moment evaluated on a ladder of budgets N, 2N, 4N with
/// independent streams.
struct MomentLadder {
  std::string name;
  std::vector<IntegralEstimate> ladder;
  double max_share = 0.0;  // at the largest budget
  bool diverging = false;
  std::string reason;

  nlohmann::json to_json() const;
};

inline constexpr double kLadderSigma = 5.0;      // consecutive rungs must agree within 5 sigma
inline constexpr double kMaxTermShare = 0.05;    // a single sample may not carry more than 5%

/// Evaluates `count` moments on the ladder and applies the divergence flags:
/// non-finite value, consecutive rungs differing by more than 5 sigma, or one
/// sample carrying more than 5% of the sum at the largest budget.
std::vector<MomentLadder> moment_ladder(const GaussianModel& model, const std::vector<std::string>& names,
                                        const MultiIntegrand& fn, std::size_t budget, std::uint64_t seed,
                                        int rungs = 3);

struct Hypothesis1Report {
  Exponents exponents;
  std::vector<MomentLadder> moments;
  bool pass = false;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Screens w^s, |grad w|^s, |log w|^t and |grad log w|^t for finiteness.
/// ||hess log w||_HS^t is screened too when available, but only warns.
Hypothesis1Report check_hypothesis1(const Weight& weight, const GaussianModel& model, std::size_t budget,
                                    std::uint64_t seed);

/// int exp(eta (x, x)_X) dmu = prod_i (1 - 2 eta lambda_i)^{-1/2}, +inf when
/// eta >= 1 / (2 lambda_max).
double exp_quadratic_moment(const GaussianModel& model, double eta);
/// Largest eta with a finite exp_quadratic_moment: 1 / (2 lambda_max).
double exp_quadratic_threshold(const GaussianModel& model);

struct FerniqueResult {
  double tau = 0.0;
  double c = 0.0;          // empirical mu(g <= tau)
  double quantile = 0.0;   // quantile level used for tau
  double alpha = 0.0;
  bool clamped = false;    // alpha set to alpha_max
  nlohmann::json to_json() const;
};

/// Exponential square-integrability constant for a p-homogeneous seminorm g:
/// tau is the empirical 75% quantile (moved up in steps of 5% until
/// c > 0.55), and alpha is the largest value with
/// log((1 - c)/c) + 2 alpha tau^2 / (sqrt(2^p) - 1)^2 <= -0.1.
/// Throws std::runtime_error when no quantile gives c > 1/2.
FerniqueResult fernique_alpha(const ScalarField& g, double p_hom, const GaussianModel& model, std::size_t budget,
                              std::uint64_t seed, double alpha_max = 10.0);

/// E|Z|^q for a standard normal Z.
double abs_normal_moment(double q);

struct MomentFormulaResult {
  double q = 0.0;
  std::vector<IntegralEstimate> partial_sums;  // MC of sum_{i<=n} E|(x, v_i)|^q, n = 1..dim
  std::vector<double> closed_form;             // c_q sum_{i<=n} lambda_i^{q/2}
  double tail_bound = 0.0;                     // closed form continued geometrically
  nlohmann::json to_json() const;
};

MomentFormulaResult moment_formula(const GaussianModel& model, double q, std::size_t budget, std::uint64_t seed);

}  // namespace wgsc
