#include "wgsc/divergence.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace wgsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool any_singular(const VectorField& phi, const Point& p) {
  for (const auto& c : phi.components())
    if (c.is_singular(p)) return true;
  return false;
}

void require_dim(const GaussianModel& model, const VectorField& phi) {
  if (phi.dim() != model.dim()) throw std::invalid_argument("vector field component count must equal model dim");
}

void require_index(const GaussianModel& model, int h) {
  if (h < 0 || h >= model.dim()) throw std::out_of_range("basis index out of range");
}

void require_hessian(const Weight& weight) {
  if (!weight.has_hessian()) throw std::invalid_argument("weight '" + weight.kind() + "' has no analytic Hessian of log w");
}

double div_mu_at(const VectorField& phi, const Point& p) {
  double s = 0.0;
  for (int k = 0; k < phi.dim(); ++k) {
    const ScalarField& c = phi.component(k);
    s += c.gradient(p)[k] - c(p) * p[k];
  }
  return s;
}

void annotate(IdentityReport& r, const Weight& weight) {
  r.detail["weight"] = weight.to_json();
  if (!weight.exponents().l2_theory()) r.warnings.push_back("t < 2 s' for this weight");
}

}  // namespace

ScalarField div_mu(const GaussianModel& model, const VectorField& phi) {
  require_dim(model, phi);
  return ScalarField([phi](const Point& p) { return any_singular(phi, p) ? kNaN : div_mu_at(phi, p); }, {}, {},
                     [phi](const Point& p) { return any_singular(phi, p); }, "Gaussian divergence");
}

DivergenceResult div_nu(const GaussianModel& model, const Weight& weight, const VectorField& phi) {
  require_dim(model, phi);
  DivergenceResult r;
  r.field_label = phi.label();
  r.div_mu = div_mu(model, phi);
  auto singular = [phi, weight](const Point& p) { return weight.is_singular(p) || any_singular(phi, p); };
  r.drift_term = ScalarField(
      [phi, weight, singular](const Point& p) { return singular(p) ? kNaN : phi(p).dot(weight.grad_log_w(p)); }, {},
      {}, singular, "drift");
  const ScalarField dm = r.div_mu;
  const ScalarField dr = r.drift_term;
  r.div_nu = ScalarField([dm, dr](const Point& p) { return dm(p) + dr(p); }, {}, {}, singular, "weighted divergence");
  return r;
}

VectorField gradient_field(const ScalarField& f, int dim) {
  std::vector<ScalarField> comps;
  for (int k = 0; k < dim; ++k) {
    comps.emplace_back([f, k](const Point& p) { return f.gradient(p)[k]; },
                       [f, k](const Point& p) -> Vector { return f.hessian(p).row(k).transpose(); }, ScalarField::Hess{},
                       f.singular_fn());
  }
  return VectorField(std::move(comps), "gradient");
}

VectorField constant_vector_field(const Vector& c) {
  std::vector<ScalarField> comps;
  for (int k = 0; k < c.size(); ++k) comps.push_back(constant_field(c[k]));
  return VectorField(std::move(comps), "constant");
}

VectorField normalized_gradient_field(const ScalarField& g, int dim) {
  auto singular = [g](const Point& p) { return g.is_singular(p) || g.gradient(p).norm() == 0.0; };
  std::vector<ScalarField> comps;
  for (int k = 0; k < dim; ++k) {
    comps.emplace_back(
        [g, k](const Point& p) {
          const Vector d = g.gradient(p);
          return d[k] / d.norm();
        },
        [g, k](const Point& p) -> Vector {
          const Vector d = g.gradient(p);
          const Matrix H = g.hessian(p);
          const double n = d.norm();
          return H.row(k).transpose() / n - d[k] * (H * d) / (n * n * n);
        },
        ScalarField::Hess{}, singular);
  }
  return VectorField(std::move(comps), "normalized gradient");
}

// ---------------------------------------------------------------------------

IdentityReport check_ibp(const GaussianModel& model, const Weight& weight, const ScalarField& f, int h,
                         const QuadratureOptions& opts, double floor) {
  require_index(model, h);
  const MultiEstimate m = integrate_nu_multi(
      model, weight, 2,
      [&](const Point& p, std::span<double> out) {
        if (f.is_singular(p) || weight.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        out[0] = f.gradient(p)[h];
        out[1] = f(p) * (p[h] - weight.grad_log_w(p)[h]);
      },
      opts);
  IdentityReport r = compare("ibp[h=" + std::to_string(h + 1) + "]", m.estimates[0], m.estimates[1], floor);
  r.detail["formula"] = "int d_h f dnu = int f (y_h - d_h log w) dnu";
  r.detail["h"] = h + 1;
  annotate(r, weight);
  return r;
}

IdentityReport bilinear_identity_check(const GaussianModel& model, const Weight& weight, const ScalarField& f,
                                       const ScalarField& g, int h, int k, const QuadratureOptions& opts,
                                       double floor) {
  require_index(model, h);
  require_index(model, k);
  require_hessian(weight);
  const double delta_hk = h == k ? 1.0 : 0.0;
  const MultiEstimate m = integrate_nu_multi(
      model, weight, 2,
      [&](const Point& p, std::span<double> out) {
        if (f.is_singular(p) || g.is_singular(p) || weight.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        const Vector gl = weight.grad_log_w(p);
        const Vector df = f.gradient(p);
        const Vector dg = g.gradient(p);
        const double fv = f(p);
        const double gv = g(p);
        const double a = fv * p[h] - fv * gl[h] - df[h];
        const double b = gv * p[k] - gv * gl[k] - dg[k];
        out[0] = a * b;
        out[1] = delta_hk * fv * gv - fv * gv * weight.hess_log_w(p)(h, k) + df[k] * dg[h];
      },
      opts);
  IdentityReport r = compare("bilinear[h=" + std::to_string(h + 1) + ";k=" + std::to_string(k + 1) + "]",
                             m.estimates[0], m.estimates[1], floor);
  r.detail["formula"] =
      "int (f y_h - f d_h log w - d_h f)(g y_k - g d_k log w - d_k g) dnu = "
      "delta_hk int fg dnu - int fg d_hk log w dnu + int d_k f d_h g dnu";
  annotate(r, weight);
  return r;
}

IdentityReport energy_identity_check(const GaussianModel& model, const Weight& weight, const VectorField& phi,
                                     const QuadratureOptions& opts, double floor) {
  require_dim(model, phi);
  require_hessian(weight);
  const DivergenceResult div = div_nu(model, weight, phi);
  const int n = model.dim();
  const MultiEstimate m = integrate_nu_multi(
      model, weight, 2,
      [&](const Point& p, std::span<double> out) {
        if (weight.is_singular(p) || any_singular(phi, p)) {
          out[0] = kNaN;
          return;
        }
        const double d = div.div_nu(p);
        const Vector v = phi(p);
        const Matrix J = phi.jacobian(p);
        const Matrix M = Matrix::Identity(n, n) - weight.hess_log_w(p);
        out[0] = d * d;
        out[1] = v.dot(M * v) + (J * J).trace();
      },
      opts);
  IdentityReport r = compare("energy", m.estimates[0], m.estimates[1], floor);
  r.detail["formula"] =
      "int (div_nu Phi)^2 dnu = int sum_ij (delta_ij - d_ij log w) phi_i phi_j dnu + int trace((grad Phi)^2) dnu";
  r.detail["field"] = phi.label();
  annotate(r, weight);
  return r;
}

IdentityReport adjointness_check(const GaussianModel& model, const Weight& weight, const ScalarField& f,
                                 const VectorField& phi, const QuadratureOptions& opts, double floor) {
  require_dim(model, phi);
  const DivergenceResult div = div_nu(model, weight, phi);
  const MultiEstimate m = integrate_nu_multi(
      model, weight, 2,
      [&](const Point& p, std::span<double> out) {
        if (f.is_singular(p) || weight.is_singular(p) || any_singular(phi, p)) {
          out[0] = kNaN;
          return;
        }
        out[0] = f.gradient(p).dot(phi(p));
        out[1] = -f(p) * div.div_nu(p);
      },
      opts);
  IdentityReport r = compare("adjoint", m.estimates[0], m.estimates[1], floor);
  r.detail["formula"] = "int <grad f, Phi> dnu = -int f div_nu Phi dnu";
  r.detail["field"] = phi.label();
  annotate(r, weight);
  return r;
}

IdentityReport l2_bound_check(const GaussianModel& model, const Weight& weight, const VectorField& phi, double C,
                              const QuadratureOptions& opts) {
  require_dim(model, phi);
  const DivergenceResult div = div_nu(model, weight, phi);
  const MultiEstimate m = integrate_nu_multi(
      model, weight, 2,
      [&](const Point& p, std::span<double> out) {
        if (weight.is_singular(p) || any_singular(phi, p)) {
          out[0] = kNaN;
          return;
        }
        const double d = div.div_nu(p);
        out[0] = d * d;
        out[1] = phi(p).squaredNorm() + phi.jacobian(p).squaredNorm();
      },
      opts);
  const auto& a = m.estimates[0];
  const auto& b = m.estimates[1];
  const double factor = std::max(std::sqrt(std::max(C, 0.0)), 1.0);
  IntegralEstimate lhs = a;
  lhs.value = std::sqrt(a.value);
  lhs.std_error = a.value > 0.0 ? a.std_error / (2.0 * lhs.value) : 0.0;
  IntegralEstimate rhs = b;
  rhs.value = factor * std::sqrt(b.value);
  rhs.std_error = b.value > 0.0 ? factor * b.std_error / (2.0 * std::sqrt(b.value)) : 0.0;
  IdentityReport r;
  r.identity_id = "l2_bound";
  r.delta = lhs.value - rhs.value;
  r.tol = kSigmaMultiple * std::hypot(lhs.std_error, rhs.std_error);
  r.pass = std::isfinite(r.delta) && r.delta <= r.tol && a.dropped == 0;
  r.lhs = lhs;
  r.rhs = rhs;
  r.detail["formula"] = "||div_nu Phi||_L2(nu) <= max(sqrt C, 1) ||Phi||_W12(nu)";
  r.detail["C"] = C;
  annotate(r, weight);
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::json Condition41Candidate::to_json() const {
  return {{"C", C},
          {"violated", violated},
          {"point", std::vector<double>(point.data(), point.data() + point.size())},
          {"ambient_norm", ambient_norm},
          {"eigenvalue", eigenvalue},
          {"in_witness_set", in_witness_set},
          {"gap_at_ambient_direction", gap_at_ambient_direction},
          {"claimed_gap_bound", claimed_gap_bound}};
}

nlohmann::json Condition41Result::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : candidates) cs.push_back(c.to_json());
  return {{"c_max_estimate", c_max_estimate},
          {"argmax", std::vector<double>(argmax.data(), argmax.data() + argmax.size())},
          {"sampled", sampled},
          {"dropped", dropped},
          {"radius", radius},
          {"witness_set_trials", witness_set_trials},
          {"witness_set_hits", witness_set_hits},
          {"candidates", cs}};
}

double condition_41_eigenvalue(const Weight& weight, const Point& p) {
  const int n = static_cast<int>(p.size());
  const Matrix M = Matrix::Identity(n, n) - weight.hess_log_w(p);
  if (M.hasNaN()) return kNaN;
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool in_condition41_set(const GaussianModel& model, const Point& p, double radius) {
  const double norm_sq = model.ambient_norm_sq(p);
  if (!(norm_sq < radius * radius)) return false;
  double s = 0.0;
  double scale = 1.0;
  for (int i = 0; i < model.dim(); ++i) {
    scale /= 4.0;
    const double xv = std::sqrt(model.eigenvalue(i)) * p[i];  // (x, v_i)
    s += scale * xv * xv;
  }
  return norm_sq < std::sqrt(0.5) * s;
}

Condition41Result condition_41_screen(const GaussianModel& model, const Weight& weight, std::size_t sample_budget,
                                      std::uint64_t seed, const std::vector<double>& candidates, double radius) {
  require_hessian(weight);
  if (sample_budget == 0) throw std::invalid_argument("condition_41_screen: empty sample budget");
  if (!(radius > 0.0)) throw std::invalid_argument("condition_41_screen: radius must be positive");
  const int n = model.dim();
  Condition41Result r;
  r.radius = radius;
  r.sampled = sample_budget;

  // Sup over Gaussian samples, with a per-block maximum reduced in order.
  const std::size_t blocks = (sample_budget + kSampleBlock - 1) / kSampleBlock;
  struct BlockMax {
    double value = -std::numeric_limits<double>::infinity();
    Point at;
    std::size_t dropped = 0;
  };
  std::vector<BlockMax> maxima(blocks);
  parallel_for_blocks(blocks, [&](std::size_t b) {
    generate_block(model, seed, b, sample_budget, [&](std::size_t, const Point& p) {
      const double e = weight.is_singular(p) ? kNaN : condition_41_eigenvalue(weight, p);
      if (std::isnan(e)) {
        ++maxima[b].dropped;
      } else if (e > maxima[b].value) {
        maxima[b].value = e;
        maxima[b].at = p;
      }
    });
  });
  r.c_max_estimate = -std::numeric_limits<double>::infinity();
  for (const auto& m : maxima) {
    r.dropped += m.dropped;
    if (m.value > r.c_max_estimate) {
      r.c_max_estimate = m.value;
      r.argmax = m.at;
    }
  }
  if (candidates.empty()) return r;

  // Rejection sampling of the explicit set inside the ball; then the
  // direction with the largest eigenvalue at half the radius.
  std::mt19937_64 engine(mix_seed(seed, 0x41));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::vector<Point> set_points;
  Point best_dir;
  double best_eig = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sample_budget; ++i) {
    Point y(n);
    for (int d = 0; d < n; ++d) y[d] = normal(engine);
    const double norm = std::sqrt(model.ambient_norm_sq(y));
    if (!(norm > 0.0)) continue;
    const Point dir = y / norm;  // unit ambient norm
    ++r.witness_set_trials;
    const Point in_ball = dir * (radius * std::pow(uniform(engine), 1.0 / n));
    if (in_condition41_set(model, in_ball, radius)) {
      ++r.witness_set_hits;
      set_points.push_back(in_ball);
    }
    const double e = condition_41_eigenvalue(weight, dir * (0.5 * radius));
    if (e > best_eig) {
      best_eig = e;
      best_dir = dir;
    }
  }

  for (double C : candidates) {
    Condition41Candidate c;
    c.C = C;
    auto record = [&](const Point& p, double e, bool in_set) {
      c.violated = true;
      c.point = p;
      c.eigenvalue = e;
      c.in_witness_set = in_set;
    };
    for (const auto& p : set_points) {
      const double e = condition_41_eigenvalue(weight, p);
      if (e > C) {
        record(p, e, true);
        break;
      }
    }
    if (!c.violated && best_dir.size() == n) {
      double t = 0.5 * radius;
      for (int step = 0; step < 400; ++step) {
        const Point p = best_dir * t;
        const double e = condition_41_eigenvalue(weight, p);
        if (e > C) {
          record(p, e, in_condition41_set(model, p, radius));
          break;
        }
        t *= 0.8;
      }
    }
    if (c.violated) {
      c.ambient_norm = std::sqrt(model.ambient_norm_sq(c.point));
      Vector xi(n);
      for (int i = 0; i < n; ++i) xi[i] = std::sqrt(model.eigenvalue(i)) * c.point[i];
      const Matrix M = Matrix::Identity(n, n) - weight.hess_log_w(c.point);
      c.gap_at_ambient_direction = C * xi.squaredNorm() - xi.dot(M * xi);
      c.claimed_gap_bound = (C - 1.0) * c.ambient_norm * c.ambient_norm - 12.0;
    }
    r.candidates.push_back(std::move(c));
  }
  return r;
}

}  // namespace wgsc
