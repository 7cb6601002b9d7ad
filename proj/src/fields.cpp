#include "wgsc/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wgsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

ScalarField::ScalarField(Eval eval, Grad grad, Hess hess, Singular singular, std::string note)
    : eval_(std::move(eval)),
      grad_(std::move(grad)),
      hess_(std::move(hess)),
      singular_(std::move(singular)),
      note_(std::move(note)) {
  if (!eval_) throw std::invalid_argument("ScalarField: evaluator is required");
}

Vector ScalarField::gradient(const Point& p) const {
  if (is_singular(p)) return nan_vector(static_cast<int>(p.size()));
  if (grad_) return grad_(p);
  return fd_gradient(p);
}

Matrix ScalarField::hessian(const Point& p) const {
  const int n = static_cast<int>(p.size());
  if (is_singular(p)) return Matrix::Constant(n, n, kNaN);
  if (hess_) return hess_(p);
  // Second-level differences need a larger step when the gradient is itself
  // numerical.
  return fd_hessian(p, grad_ ? kFdStep : 1e-4);
}

Vector ScalarField::fd_gradient(const Point& p, double h) const {
  const int n = static_cast<int>(p.size());
  if (is_singular(p)) return nan_vector(n);
  Vector g(n);
  Point q = p;
  for (int i = 0; i < n; ++i) {
    q[i] = p[i] + h;
    const double fp = eval_(q);
    q[i] = p[i] - h;
    const double fm = eval_(q);
    q[i] = p[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix ScalarField::fd_hessian(const Point& p, double h) const {
  const int n = static_cast<int>(p.size());
  if (is_singular(p)) return Matrix::Constant(n, n, kNaN);
  Matrix H(n, n);
  Point q = p;
  if (grad_) {
    for (int j = 0; j < n; ++j) {
      q[j] = p[j] + h;
      const Vector gp = grad_(q);
      q[j] = p[j] - h;
      const Vector gm = grad_(q);
      q[j] = p[j];
      H.col(j) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
  }
  const double f0 = eval_(p);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v;
      if (i == j) {
        q[i] = p[i] + h;
        const double fp = eval_(q);
        q[i] = p[i] - h;
        const double fm = eval_(q);
        q[i] = p[i];
        v = (fp - 2.0 * f0 + fm) / (h * h);
      } else {
        double acc = 0.0;
        for (int si = -1; si <= 1; si += 2) {
          for (int sj = -1; sj <= 1; sj += 2) {
            q[i] = p[i] + si * h;
            q[j] = p[j] + sj * h;
            acc += si * sj * eval_(q);
          }
        }
        q[i] = p[i];
        q[j] = p[j];
        v = acc / (4.0 * h * h);
      }
      H(i, j) = H(j, i) = v;
    }
  }
  return H;
}

ScalarField ScalarField::with_note(std::string note) const {
  ScalarField f = *this;
  f.note_ = std::move(note);
  return f;
}

ScalarField ScalarField::derivative_free() const {
  return ScalarField(eval_, {}, {}, singular_, note_);
}

VectorField::VectorField(std::vector<ScalarField> components, std::string label)
    : components_(std::move(components)), label_(std::move(label)) {
  if (components_.empty()) throw std::invalid_argument("VectorField: no components");
}

Vector VectorField::operator()(const Point& p) const {
  Vector v(dim());
  for (int k = 0; k < dim(); ++k) v[k] = components_[static_cast<std::size_t>(k)](p);
  return v;
}

Matrix VectorField::jacobian(const Point& p) const {
  Matrix J(dim(), p.size());
  for (int k = 0; k < dim(); ++k) J.row(k) = components_[static_cast<std::size_t>(k)].gradient(p).transpose();
  return J;
}

bool has_nan(const Vector& v) { return v.hasNaN(); }
bool has_nan(const Matrix& m) { return m.hasNaN(); }
Vector nan_vector(int n) { return Vector::Constant(n, kNaN); }

Vector grad_H(const ScalarField& field, const Point& p) { return field.gradient(p); }

// ---------------------------------------------------------------------------

ScalarField constant_field(double c) {
  return ScalarField([c](const Point&) { return c; },
                     [](const Point& p) { return Vector::Zero(p.size()).eval(); },
                     [](const Point& p) { return Matrix::Zero(p.size(), p.size()).eval(); }, {},
                     "constant");
}

ScalarField coordinate_field(int dim, int k) {
  if (k < 0 || k >= dim) throw std::out_of_range("coordinate_field: index out of range");
  return ScalarField([k](const Point& p) { return p[k]; },
                     [k](const Point& p) {
                       Vector g = Vector::Zero(p.size());
                       g[k] = 1.0;
                       return g;
                     },
                     [](const Point& p) { return Matrix::Zero(p.size(), p.size()).eval(); }, {},
                     "coordinate");
}

ScalarField cylindrical(OuterFunction outer, Matrix functionals) {
  if (!outer.value || !outer.gradient) throw std::invalid_argument("cylindrical: outer needs value and gradient");
  auto L = std::make_shared<const Matrix>(std::move(functionals));
  auto out = std::make_shared<const OuterFunction>(std::move(outer));
  auto check = [L](const Point& p) {
    if (p.size() != L->cols()) throw std::invalid_argument("cylindrical: dimension mismatch");
  };
  ScalarField::Hess hess;
  if (out->hessian) {
    hess = [L, out, check](const Point& p) -> Matrix {
      check(p);
      const Vector z = (*L) * p;
      return L->transpose() * out->hessian(z) * (*L);
    };
  }
  return ScalarField(
      [L, out, check](const Point& p) {
        check(p);
        return out->value((*L) * p);
      },
      [L, out, check](const Point& p) -> Vector {
        check(p);
        return L->transpose() * out->gradient((*L) * p);
      },
      std::move(hess), {}, "cylindrical");
}

ScalarField gaussian_bump(const Vector& center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be positive");
  const int n = static_cast<int>(center.size());
  const double inv = 1.0 / (width * width);
  OuterFunction outer;
  outer.value = [center, inv](const Vector& z) { return std::exp(-0.5 * inv * (z - center).squaredNorm()); };
  outer.gradient = [center, inv](const Vector& z) -> Vector {
    const double v = std::exp(-0.5 * inv * (z - center).squaredNorm());
    return -inv * v * (z - center);
  };
  outer.hessian = [center, inv](const Vector& z) -> Matrix {
    const Vector d = z - center;
    const double v = std::exp(-0.5 * inv * d.squaredNorm());
    return v * (inv * inv * d * d.transpose() - inv * Matrix::Identity(d.size(), d.size()));
  };
  return cylindrical(std::move(outer), Matrix::Identity(n, n)).with_note("gaussian bump");
}

ScalarField polynomial(int dim, std::vector<Monomial> terms) {
  for (const auto& t : terms) {
    if (static_cast<int>(t.exponents.size()) != dim)
      throw std::invalid_argument("polynomial: exponent vector length must equal dim");
    for (int e : t.exponents)
      if (e < 0) throw std::invalid_argument("polynomial: negative exponent");
  }
  auto T = std::make_shared<const std::vector<Monomial>>(std::move(terms));
  auto check = [dim](const Point& p) {
    if (p.size() != dim) throw std::invalid_argument("polynomial: dimension mismatch");
  };
  // d^a/dy^a of y^e as coefficient * y^(e-a).
  auto mono = [](const Point& p, const std::vector<int>& e, int di, int dj) {
    double v = 1.0;
    for (int i = 0; i < static_cast<int>(e.size()); ++i) {
      int k = e[static_cast<std::size_t>(i)];
      int order = (i == di) + (i == dj);
      double c = 1.0;
      for (int o = 0; o < order; ++o) {
        c *= k;
        --k;
      }
      if (c == 0.0) return 0.0;
      v *= c * (k == 0 ? 1.0 : std::pow(p[i], k));
    }
    return v;
  };
  return ScalarField(
      [T, check, mono](const Point& p) {
        check(p);
        double s = 0.0;
        for (const auto& t : *T) s += t.coefficient * mono(p, t.exponents, -1, -1);
        return s;
      },
      [T, check, mono](const Point& p) {
        check(p);
        Vector g = Vector::Zero(p.size());
        for (const auto& t : *T)
          for (int i = 0; i < p.size(); ++i) g[i] += t.coefficient * mono(p, t.exponents, i, -1);
        return g;
      },
      [T, check, mono](const Point& p) {
        check(p);
        Matrix H = Matrix::Zero(p.size(), p.size());
        for (const auto& t : *T)
          for (int i = 0; i < p.size(); ++i)
            for (int j = 0; j < p.size(); ++j) H(i, j) += t.coefficient * mono(p, t.exponents, i, j);
        return H;
      },
      {}, "polynomial");
}

namespace {

ScalarField::Singular either(const ScalarField& f, const ScalarField& g) {
  if (!f.singular_fn() && !g.singular_fn()) return {};
  return [f, g](const Point& p) { return f.is_singular(p) || g.is_singular(p); };
}

}  // namespace

ScalarField sum(const ScalarField& f, const ScalarField& g) {
  ScalarField::Hess hess;
  if (f.has_hessian() && g.has_hessian())
    hess = [f, g](const Point& p) -> Matrix { return f.hessian(p) + g.hessian(p); };
  ScalarField::Grad grad;
  if (f.has_gradient() && g.has_gradient())
    grad = [f, g](const Point& p) -> Vector { return f.gradient(p) + g.gradient(p); };
  return ScalarField([f, g](const Point& p) { return f(p) + g(p); }, std::move(grad), std::move(hess),
                     either(f, g), "sum");
}

ScalarField scaled(const ScalarField& f, double a) {
  ScalarField::Grad grad;
  if (f.has_gradient()) grad = [f, a](const Point& p) -> Vector { return a * f.gradient(p); };
  ScalarField::Hess hess;
  if (f.has_hessian()) hess = [f, a](const Point& p) -> Matrix { return a * f.hessian(p); };
  return ScalarField([f, a](const Point& p) { return a * f(p); }, std::move(grad), std::move(hess),
                     f.singular_fn(), f.note());
}

ScalarField product(const ScalarField& f, const ScalarField& g) {
  ScalarField::Grad grad;
  if (f.has_gradient() && g.has_gradient())
    grad = [f, g](const Point& p) -> Vector { return f(p) * g.gradient(p) + g(p) * f.gradient(p); };
  ScalarField::Hess hess;
  if (f.has_hessian() && g.has_hessian()) {
    hess = [f, g](const Point& p) -> Matrix {
      const Vector gf = f.gradient(p);
      const Vector gg = g.gradient(p);
      return f(p) * g.hessian(p) + g(p) * f.hessian(p) + gf * gg.transpose() + gg * gf.transpose();
    };
  }
  return ScalarField([f, g](const Point& p) { return f(p) * g(p); }, std::move(grad), std::move(hess),
                     either(f, g), "product");
}

ScalarField compose(const RealFunction& theta, const ScalarField& f) {
  if (!theta.value || !theta.derivative) throw std::invalid_argument("compose: theta needs value and derivative");
  ScalarField::Hess hess;
  if (theta.second && f.has_hessian()) {
    hess = [theta, f](const Point& p) -> Matrix {
      const double v = f(p);
      const Vector g = f.gradient(p);
      return theta.second(v) * g * g.transpose() + theta.derivative(v) * f.hessian(p);
    };
  }
  return ScalarField([theta, f](const Point& p) { return theta.value(f(p)); },
                     [theta, f](const Point& p) -> Vector { return theta.derivative(f(p)) * f.gradient(p); },
                     std::move(hess), f.singular_fn(), "composition");
}

ScalarField modulus(const ScalarField& u) {
  return ScalarField([u](const Point& p) { return std::abs(u(p)); },
                     [u](const Point& p) -> Vector { return sign_of(u(p)) * u.gradient(p); }, {},
                     [u](const Point& p) { return u.is_singular(p) || u(p) == 0.0; }, "modulus");
}

ScalarField lq_norm_field(const GaussianModel& model, double q) {
  if (!(q > 1.0)) throw std::invalid_argument("lq_norm: q must exceed 1");
  std::vector<double> sl;
  for (double l : model.spectrum()) sl.push_back(std::sqrt(l));
  auto eval = [sl, q](const Point& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < sl.size(); ++i) s += std::pow(std::abs(sl[i] * p[static_cast<int>(i)]), q);
    return std::pow(s, 1.0 / q);
  };
  auto grad = [sl, q, eval](const Point& p) -> Vector {
    const double norm = eval(p);
    Vector g(p.size());
    for (std::size_t i = 0; i < sl.size(); ++i) {
      const double x = sl[i] * p[static_cast<int>(i)];
      g[static_cast<int>(i)] = sl[i] * sign_of(x) * std::pow(std::abs(x), q - 1.0) * std::pow(norm, 1.0 - q);
    }
    return g;
  };
  auto singular = [](const Point& p) { return (p.array() == 0.0).any(); };
  return ScalarField(eval, grad, {}, singular, "l_q norm; nonsmooth on coordinate hyperplanes");
}

ScalarField l2_norm_field(const GaussianModel& model) {
  Vector lam = Eigen::Map<const Vector>(model.spectrum().data(), model.dim());
  auto eval = [lam](const Point& p) { return std::sqrt((lam.array() * p.array().square()).sum()); };
  auto grad = [lam, eval](const Point& p) -> Vector {
    return (lam.array() * p.array()).matrix() / eval(p);
  };
  auto hess = [lam, eval](const Point& p) -> Matrix {
    const double r = eval(p);
    const Vector u = (lam.array() * p.array()).matrix();
    Matrix H = Matrix(lam.asDiagonal()) / r;
    H -= u * u.transpose() / (r * r * r);
    return H;
  };
  auto singular = [](const Point& p) { return (p.array() == 0.0).all(); };
  return ScalarField(eval, grad, hess, singular, "ambient norm; singular at the origin");
}

// ---------------------------------------------------------------------------

SupNormKL::SupNormKL(const GaussianModel& model, int grid_size) : grid_size_(grid_size) {
  if (grid_size < 64) throw std::invalid_argument("sup_norm_kl: grid_size must be at least 64");
  for (double l : model.spectrum()) sqrt_lambda_.push_back(std::sqrt(l));
  const int n = model.dim();
  table_.resize(grid_size, n);
  for (int j = 0; j < grid_size; ++j) {
    const double xi = static_cast<double>(j) / (grid_size - 1);
    for (int i = 0; i < n; ++i) table_(j, i) = basis(i, xi);
  }
}

double SupNormKL::basis(int i, double xi) const {
  const double s = sqrt_lambda_[static_cast<std::size_t>(i)];
  return std::sqrt(2.0) * s * std::sin(xi / s);
}

double SupNormKL::path(const Point& p, double xi) const {
  double v = 0.0;
  for (int i = 0; i < p.size(); ++i) v += p[i] * basis(i, xi);
  return v;
}

SupNormKL::Extremum SupNormKL::locate(const Point& p) const {
  if (p.size() != table_.cols()) throw std::invalid_argument("sup_norm_kl: dimension mismatch");
  const Vector values = table_ * p;
  int best = 0;
  double best_abs = std::abs(values[0]);
  for (int j = 1; j < grid_size_; ++j) {
    const double a = std::abs(values[j]);
    if (a > best_abs) {
      best_abs = a;
      best = j;
    }
  }
  Extremum e;
  e.grid_index = best;
  e.value = best_abs;
  e.argmax = static_cast<double>(best) / (grid_size_ - 1);
  e.sign = sign_of(values[best]);
  if (best_abs == 0.0) return e;

  // Refine on the continuous path inside the neighbouring cells.
  const double s = e.sign;
  const double step = 1.0 / (grid_size_ - 1);
  double a = std::max(0.0, e.argmax - step);
  double b = std::min(1.0, e.argmax + step);
  auto g = [&](double xi) { return s * path(p, xi); };
  auto dg = [&](double xi) {
    double v = 0.0;
    for (int i = 0; i < p.size(); ++i) {
      const double sl = sqrt_lambda_[static_cast<std::size_t>(i)];
      v += p[i] * std::sqrt(2.0) * std::cos(xi / sl);
    }
    return s * v;
  };
  auto d2g = [&](double xi) {
    double v = 0.0;
    for (int i = 0; i < p.size(); ++i) {
      const double sl = sqrt_lambda_[static_cast<std::size_t>(i)];
      v -= p[i] * std::sqrt(2.0) * std::sin(xi / sl) / sl;
    }
    return s * v;
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - phi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + phi * (b - a);
      gd = g(d);
    }
  }
  const double lo = std::max(0.0, e.argmax - step);
  const double hi = std::min(1.0, e.argmax + step);
  double xi = 0.5 * (a + b);
  for (int it = 0; it < 3; ++it) {
    const double h2 = d2g(xi);
    if (!(h2 < 0.0)) break;
    const double next = xi - dg(xi) / h2;
    if (next < lo || next > hi) break;
    xi = next;
  }
  double best_xi = e.argmax;
  double best_val = best_abs;
  for (double cand : {xi, hi}) {
    const double v = g(cand);
    if (v > best_val) {
      best_val = v;
      best_xi = cand;
    }
  }
  e.value = best_val;
  e.argmax = best_xi;
  return e;
}

ScalarField SupNormKL::field() const {
  auto self = std::make_shared<const SupNormKL>(*this);
  return ScalarField([self](const Point& p) { return self->locate(p).value; },
                     [self](const Point& p) -> Vector {
                       const auto e = self->locate(p);
                       Vector g(p.size());
                       for (int i = 0; i < p.size(); ++i) g[i] = e.sign * self->basis(i, e.argmax);
                       return g;
                     },
                     {}, [self](const Point& p) { return self->locate(p).value == 0.0; },
                     "sup norm of the KL path; nonsmooth on the tie set");
}

// ---------------------------------------------------------------------------

double relative_deviation(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1.0);
}

DerivativeCheck check_gradient_fd(const ScalarField& field, const std::vector<Point>& points, double h) {
  if (!field.has_gradient()) throw std::invalid_argument("check_gradient_fd: field has no analytic gradient");
  DerivativeCheck r;
  for (const auto& p : points) {
    if (field.is_singular(p)) {
      ++r.skipped;
      continue;
    }
    r.max_rel_error = std::max(r.max_rel_error, relative_deviation(field.fd_gradient(p, h), field.gradient(p)));
    ++r.checked;
  }
  return r;
}

DerivativeCheck check_hessian_fd(const ScalarField& field, const std::vector<Point>& points, double h) {
  if (!field.has_hessian()) throw std::invalid_argument("check_hessian_fd: field has no analytic Hessian");
  DerivativeCheck r;
  for (const auto& p : points) {
    if (field.is_singular(p)) {
      ++r.skipped;
      continue;
    }
    const Matrix H = field.hessian(p);
    const Matrix F = field.fd_hessian(p, h);
    const double scale = std::max(H.norm(), 1.0);
    const double asym = (H - H.transpose()).norm() / scale;
    r.max_rel_error = std::max({r.max_rel_error, (H - F).norm() / scale, asym});
    ++r.checked;
  }
  return r;
}

DerivativeCheck chain_rule_check(const RealFunction& theta, const ScalarField& field,
                                 const std::vector<Point>& points) {
  const ScalarField composed([theta, field](const Point& p) { return theta.value(field(p)); }, {}, {},
                             field.singular_fn());
  DerivativeCheck r;
  for (const auto& p : points) {
    if (field.is_singular(p)) {
      ++r.skipped;
      continue;
    }
    const Vector lhs = composed.fd_gradient(p);
    const Vector rhs = theta.derivative(field(p)) * field.gradient(p);
    r.max_rel_error = std::max(r.max_rel_error, relative_deviation(lhs, rhs));
    ++r.checked;
  }
  return r;
}

DerivativeCheck modulus_rule_check(const ScalarField& u, const std::vector<Point>& points, double exclusion) {
  const ScalarField abs_u([u](const Point& p) { return std::abs(u(p)); });
  DerivativeCheck r;
  for (const auto& p : points) {
    if (u.is_singular(p) || std::abs(u(p)) <= exclusion) {
      ++r.skipped;
      continue;
    }
    const Vector lhs = abs_u.fd_gradient(p);
    const Vector rhs = sign_of(u(p)) * u.gradient(p);
    r.max_rel_error = std::max(r.max_rel_error, relative_deviation(lhs, rhs));
    ++r.checked;
  }
  return r;
}

DerivativeCheck product_rule_check(const ScalarField& f, const ScalarField& g, const std::vector<Point>& points) {
  const ScalarField fg = product(f, g).derivative_free();
  DerivativeCheck r;
  for (const auto& p : points) {
    if (f.is_singular(p) || g.is_singular(p)) {
      ++r.skipped;
      continue;
    }
    const Vector lhs = fg.fd_gradient(p);
    const Vector rhs = f(p) * g.gradient(p) + g(p) * f.gradient(p);
    r.max_rel_error = std::max(r.max_rel_error, relative_deviation(lhs, rhs));
    ++r.checked;
  }
  return r;
}

}  // namespace wgsc
