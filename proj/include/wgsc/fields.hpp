#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wgsc/gaussian.hpp"

namespace wgsc {

/// Central finite-difference step in whitened coordinates.
inline constexpr double kFdStep = 1e-5;

/// Real function on the truncation space with an H-calculus contract.
///
/// The evaluator is mandatory; the H-gradient and H-Hessian are optional and
/// fall back to central finite differences. In whitened coordinates the
/// H-gradient is the ordinary gradient and d_k f is the k-th partial.
/// Nonsmooth fields declare their singular set by a predicate: derivative
/// requests inside it return a NaN-filled result instead of a number.
class ScalarField {
 public:
  using Eval = std::function<double(const Point&)>;
  using Grad = std::function<Vector(const Point&)>;
  using Hess = std::function<Matrix(const Point&)>;
  using Singular = std::function<bool(const Point&)>;

  ScalarField() = default;
  explicit ScalarField(Eval eval, Grad grad = {}, Hess hess = {}, Singular singular = {},
                       std::string note = {});

  double operator()(const Point& p) const { return eval_(p); }

  bool valid() const { return static_cast<bool>(eval_); }
  bool has_gradient() const { return static_cast<bool>(grad_); }
  bool has_hessian() const { return static_cast<bool>(hess_); }
  bool is_singular(const Point& p) const { return singular_ && singular_(p); }
  const std::string& note() const { return note_; }

  /// Analytic gradient when present, else central differences.
  Vector gradient(const Point& p) const;
  /// Analytic Hessian when present, else central differences of gradient().
  Matrix hessian(const Point& p) const;

  Vector fd_gradient(const Point& p, double h = kFdStep) const;
  Matrix fd_hessian(const Point& p, double h = kFdStep) const;

  const Eval& eval_fn() const { return eval_; }
  const Singular& singular_fn() const { return singular_; }

  ScalarField with_note(std::string note) const;
  /// Copy that keeps only the evaluator (and singular set), so every
  /// derivative is taken numerically.
  ScalarField derivative_free() const;

 private:
  Eval eval_;
  Grad grad_;
  Hess hess_;
  Singular singular_;
  std::string note_;
};

/// Vector field Phi = sum_k phi_k e_k with components phi_k = <Phi, e_k>_H.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::vector<ScalarField> components, std::string label = {});

  int dim() const { return static_cast<int>(components_.size()); }
  const ScalarField& component(int k) const { return components_.at(static_cast<std::size_t>(k)); }
  const std::vector<ScalarField>& components() const { return components_; }
  const std::string& label() const { return label_; }

  Vector operator()(const Point& p) const;
  /// Jacobian J(i, j) = d_j phi_i.
  Matrix jacobian(const Point& p) const;

 private:
  std::vector<ScalarField> components_;
  std::string label_;
};

bool has_nan(const Vector& v);
bool has_nan(const Matrix& m);
Vector nan_vector(int n);

/// H-gradient at p: analytic if available, else central FD with step 1e-5.
Vector grad_H(const ScalarField& field, const Point& p);

// ---------------------------------------------------------------------------
// Constructors.

ScalarField constant_field(double c);
/// hat{e}_k (0-based k) on a dim-dimensional model.
ScalarField coordinate_field(int dim, int k);

/// Smooth outer function R^m -> R with its own derivatives.
struct OuterFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;  // optional
};

/// f(y) = outer(L y) where the rows of `functionals` (m x n) are whitened
/// linear forms; derivatives by the chain rule.
ScalarField cylindrical(OuterFunction outer, Matrix functionals);

/// exp(-|y - center|^2 / (2 width^2)); smooth and bounded.
ScalarField gaussian_bump(const Vector& center, double width);

/// Polynomial sum_m c_m prod_i y_i^{e_{m,i}} with analytic derivatives.
struct Monomial {
  double coefficient = 0.0;
  std::vector<int> exponents;
};
ScalarField polynomial(int dim, std::vector<Monomial> terms);

ScalarField sum(const ScalarField& f, const ScalarField& g);
ScalarField scaled(const ScalarField& f, double a);
/// Product with the Leibniz rule for the derivatives.
ScalarField product(const ScalarField& f, const ScalarField& g);

/// C^1 function of one real variable.
struct RealFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> second;  // optional
};
/// theta o f with chain-rule derivatives.
ScalarField compose(const RealFunction& theta, const ScalarField& f);
/// |u| with gradient sign(u) grad u; singular on {u = 0}.
ScalarField modulus(const ScalarField& u);

/// Ambient l_q norm ||x||_q = (sum_i |sqrt(lambda_i) y_i|^q)^{1/q}, q > 1.
/// Gradient d_i = sqrt(lambda_i) sign(x_i) |x_i|^{q-1} ||x||_q^{1-q}; singular
/// at the origin and on coordinate hyperplanes.
ScalarField lq_norm_field(const GaussianModel& model, double q);
/// Ambient Hilbert norm ||x||_X = sqrt(sum_i lambda_i y_i^2).
ScalarField l2_norm_field(const GaussianModel& model);

/// Sup norm of the Karhunen-Loeve path f(xi) = sum_i y_i sqrt(2 lambda_i)
/// sin(xi / sqrt(lambda_i)) over [0, 1], located on a uniform grid of
/// grid_size points (first index wins ties) and refined by Newton steps on
/// the continuous path. Gradient by the argmax formula
/// d_i = sign(f(xi*)) f_i(xi*).
class SupNormKL {
 public:
  SupNormKL(const GaussianModel& model, int grid_size);

  struct Extremum {
    double value = 0.0;   // max |f|
    double argmax = 0.0;  // xi*
    double sign = 0.0;    // sign f(xi*)
    int grid_index = 0;
  };
  Extremum locate(const Point& p) const;
  /// Path value f(xi) with the current coefficients.
  double path(const Point& p, double xi) const;
  /// Basis function f_i(xi) (0-based i).
  double basis(int i, double xi) const;
  ScalarField field() const;
  int grid_size() const { return grid_size_; }

 private:
  std::vector<double> sqrt_lambda_;
  int grid_size_;
  Matrix table_;  // grid_size x n basis values
};

// ---------------------------------------------------------------------------
// Derivative checks.

struct DerivativeCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // points inside the singular set or exclusion band
};

/// Relative deviation ||a - b|| / max(||b||, 1).
double relative_deviation(const Vector& a, const Vector& b);

/// Analytic gradient vs central FD of the evaluator at the given points.
DerivativeCheck check_gradient_fd(const ScalarField& field, const std::vector<Point>& points,
                                  double h = kFdStep);
/// Analytic Hessian vs central FD of the analytic gradient, plus symmetry.
DerivativeCheck check_hessian_fd(const ScalarField& field, const std::vector<Point>& points,
                                 double h = kFdStep);

/// grad(theta o phi), taken by finite differences of the composed evaluator,
/// against (theta' o phi) grad(phi).
DerivativeCheck chain_rule_check(const RealFunction& theta, const ScalarField& field,
                                 const std::vector<Point>& points);
/// grad|u| (finite differences of |u|) against sign(u) grad u at points with
/// |u| > exclusion.
DerivativeCheck modulus_rule_check(const ScalarField& u, const std::vector<Point>& points,
                                   double exclusion = 1e-8);
/// grad(fg) against f grad g + g grad f (analytic product vs components).
DerivativeCheck product_rule_check(const ScalarField& f, const ScalarField& g,
                                   const std::vector<Point>& points);

}  // namespace wgsc
