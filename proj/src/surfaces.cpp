#include "wgsc/surfaces.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "wgsc/quadrature.hpp"

namespace wgsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double gaussian_density(const Point& y) {
  return std::exp(-0.5 * y.squaredNorm() - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi));
}

double inv_sqrt_det(const std::vector<double>& spectrum) {
  double s = 1.0;
  for (double l : spectrum) s /= std::sqrt(l);
  return s;
}

void require_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("surface band delta must be positive");
}

}  // namespace

double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

LevelSetSurface::LevelSetSurface(SurfaceKind kind, ScalarField g, double delta, std::string label)
    : kind_(kind), g_(std::move(g)), delta_(delta), label_(std::move(label)) {
  require_delta(delta);
  if (!g_.valid()) throw std::invalid_argument("surface needs a level-set function");
}

LevelSetSurface LevelSetSurface::hyperplane(const GaussianModel& model, const Vector& normal, double offset,
                                            double delta) {
  if (normal.size() != model.dim()) throw std::invalid_argument("hyperplane normal has the wrong dimension");
  if (!(normal.norm() > 0.0)) throw std::invalid_argument("hyperplane normal must be nonzero");
  ScalarField g([normal, offset](const Point& p) { return normal.dot(p) - offset; },
                [normal](const Point&) -> Vector { return normal; },
                [n = model.dim()](const Point&) -> Matrix { return Matrix::Zero(n, n); });
  LevelSetSurface s(SurfaceKind::Hyperplane, std::move(g), delta, "hyperplane");
  s.normal_ = normal;
  s.offset_ = offset;
  s.spectrum_ = model.spectrum();
  return s;
}

LevelSetSurface LevelSetSurface::sphere(const GaussianModel& model, double radius, double delta) {
  if (!(radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
  const ScalarField norm = l2_norm_field(model);
  ScalarField g([norm, radius](const Point& p) { return norm(p) - radius; },
                [norm](const Point& p) -> Vector { return norm.gradient(p); },
                [norm](const Point& p) -> Matrix { return norm.hessian(p); }, norm.singular_fn());
  LevelSetSurface s(SurfaceKind::Ellipsoid, std::move(g), delta, "sphere");
  s.radius_ = radius;
  s.spectrum_ = model.spectrum();
  return s;
}

LevelSetSurface LevelSetSurface::l2_path_sphere(const GaussianModel& model, double delta) {
  LevelSetSurface s = sphere(model, 1.0, delta);
  s.label_ = "l2_path_sphere";
  return s;
}

LevelSetSurface LevelSetSurface::custom(ScalarField g, double delta, std::string label) {
  if (!g.has_gradient()) throw std::invalid_argument("custom surface needs an analytic gradient");
  return LevelSetSurface(SurfaceKind::Custom, std::move(g), delta, std::move(label));
}

nlohmann::json LevelSetSurface::to_json() const {
  nlohmann::json j{{"label", label_}, {"delta", delta_}};
  switch (kind_) {
    case SurfaceKind::Hyperplane:
      j["kind"] = "hyperplane";
      j["normal"] = std::vector<double>(normal_.data(), normal_.data() + normal_.size());
      j["offset"] = offset_;
      break;
    case SurfaceKind::Ellipsoid:
      j["kind"] = "sphere";
      j["radius"] = radius_;
      break;
    case SurfaceKind::Custom:
      j["kind"] = "custom";
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------

std::vector<IntegralEstimate> surface_integral_exact_multi(const GaussianModel& model,
                                                           const LevelSetSurface& surface, std::size_t count,
                                                           const MultiIntegrand& fn, const SurfaceQuadrature& q) {
  if (!surface.has_exact()) throw std::invalid_argument("surface has no exact parametrization");
  const int n = model.dim();
  std::vector<double> sums(count, 0.0);
  std::vector<double> values(count);
  std::size_t nodes = 0;
  std::size_t dropped = 0;
  auto visit = [&](const Point& y, double weight) {
    ++nodes;
    if (!(surface.G().gradient(y).norm() > kGradientUnderflow))
      throw std::runtime_error("|grad G| underflow on a surface node");
    std::fill(values.begin(), values.end(), 0.0);
    fn(y, values);
    for (double v : values) {
      if (std::isnan(v)) {
        ++dropped;
        return;
      }
    }
    for (std::size_t k = 0; k < count; ++k) sums[k] += weight * values[k];
  };

  if (surface.kind() == SurfaceKind::Hyperplane) {
    const double len = surface.normal().norm();
    const Vector u = surface.normal() / len;
    const double d = surface.offset() / len;
    const double base = normal_pdf(d);
    if (n == 1) {
      visit(Point::Constant(1, d * u[0]), base);
    } else {
      if (n - 1 > kMaxGhDim) throw std::invalid_argument("exact hyperplane rule limited to dim <= 9");
      const Matrix B = complement_basis(u);
      const std::vector<Rule1D> rules(static_cast<std::size_t>(n - 1), gauss_hermite(q.gh_nodes));
      if (tensor_size(rules) > kMaxGhTensor) throw std::invalid_argument("surface node budget overflow");
      for_each_tensor_node(rules, [&](const Vector& z, double w) { visit(d * u + B * z, base * w); });
    }
  } else {
    const auto& spec = model.spectrum();
    const double r = surface.radius();
    const double jac = inv_sqrt_det(spec) * std::pow(r, n - 1);
    if (n == 1) {
      for (double sgn : {-1.0, 1.0}) {
        const Point y = Point::Constant(1, sgn * r / std::sqrt(spec[0]));
        visit(y, gaussian_density(y));
      }
    } else {
      const SphereRule rule = sphere_rule(n, q.sphere_order);
      if (rule.nodes.size() > kMaxGhTensor) throw std::invalid_argument("surface node budget overflow");
      Point y(n);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Vector& u = rule.nodes[i];
        double stretch = 0.0;
        for (int k = 0; k < n; ++k) {
          const double l = spec[static_cast<std::size_t>(k)];
          y[k] = r * u[k] / std::sqrt(l);
          stretch += l * u[k] * u[k];
        }
        visit(y, rule.weights[i] * jac * std::sqrt(stretch) * gaussian_density(y));
      }
    }
  }
  std::vector<IntegralEstimate> out;
  for (std::size_t k = 0; k < count; ++k) {
    IntegralEstimate e;
    e.value = sums[k];
    e.method = Method::Exact;
    e.n_eval = nodes;
    e.dropped = dropped;
    out.push_back(std::move(e));
  }
  return out;
}

IntegralEstimate surface_integral_exact(const GaussianModel& model, const LevelSetSurface& surface,
                                        const ScalarField& integrand, const SurfaceQuadrature& q) {
  return surface_integral_exact_multi(
             model, surface, 1, [&](const Point& p, std::span<double> out) { out[0] = integrand(p); }, q)
      .front();
}

// ---------------------------------------------------------------------------

nlohmann::json ShellEstimate::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& e : rungs) rs.push_back(e.to_json());
  return {{"value", value.to_json()}, {"epsilon", epsilon}, {"rungs", rs},
          {"hits", hits},             {"slope", slope},     {"epsilon_consistent", epsilon_consistent}};
}

namespace {

ShellEstimate fit_shell(const std::vector<double>& eps, const std::vector<IntegralEstimate>& rungs,
                        const std::vector<std::size_t>& hits) {
  ShellEstimate s;
  s.epsilon = eps;
  s.rungs = rungs;
  s.hits = hits;
  const int m = static_cast<int>(eps.size());
  bool weighted = true;
  for (const auto& r : rungs)
    if (!(r.std_error > 0.0)) weighted = false;
  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (int i = 0; i < m; ++i) {
    const double w = weighted ? 1.0 / (rungs[static_cast<std::size_t>(i)].std_error *
                                       rungs[static_cast<std::size_t>(i)].std_error)
                              : 1.0;
    const Eigen::Vector2d x(1.0, eps[static_cast<std::size_t>(i)] * eps[static_cast<std::size_t>(i)]);
    normal += w * x * x.transpose();
    rhs += w * x * rungs[static_cast<std::size_t>(i)].value;
  }
  IntegralEstimate v;
  v.method = Method::MonteCarlo;
  for (const auto& r : rungs) {
    v.n_eval += r.n_eval;
    v.dropped += r.dropped;
  }
  if (m == 1) {
    v.value = rungs.front().value;
    v.std_error = rungs.front().std_error;
  } else {
    const Eigen::Matrix2d cov = normal.inverse();
    const Eigen::Vector2d coef = cov * rhs;
    v.value = coef[0];
    s.slope = coef[1];
    v.std_error = weighted ? std::sqrt(cov(0, 0)) : 0.0;
    const auto& a = rungs[static_cast<std::size_t>(m - 2)];
    const auto& b = rungs[static_cast<std::size_t>(m - 1)];
    const double e2 = eps[static_cast<std::size_t>(m - 2)] * eps[static_cast<std::size_t>(m - 2)] -
                      eps[static_cast<std::size_t>(m - 1)] * eps[static_cast<std::size_t>(m - 1)];
    s.epsilon_consistent = std::abs(a.value - b.value) <=
                           std::abs(s.slope) * std::abs(e2) + kSigmaMultiple * std::hypot(a.std_error, b.std_error);
  }
  s.value = v;
  return s;
}

}  // namespace

std::vector<ShellEstimate> surface_integral_shell_multi(const GaussianModel& model,
                                                        const LevelSetSurface& surface, std::size_t count,
                                                        const MultiIntegrand& fn,
                                                        const std::vector<int>& projections,
                                                        const ShellOptions& opts) {
  if (count == 0 || projections.empty()) throw std::invalid_argument("shell estimator: nothing to integrate");
  if (opts.fractions.empty()) throw std::invalid_argument("shell estimator: empty epsilon ladder");
  for (int m : projections)
    if (m < 0 || m > model.dim()) throw std::invalid_argument("shell estimator: projection dim out of range");
  std::vector<double> eps;
  for (double f : opts.fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("shell estimator: fractions must lie in (0, 1]");
    eps.push_back(surface.delta() * f);
  }
  const std::size_t slots = count * projections.size();
  std::vector<std::vector<IntegralEstimate>> rungs(slots);
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double e = eps[i];
    QuadratureOptions q;
    q.method = Method::MonteCarlo;
    q.budget = opts.budget;
    q.seed = mix_seed(opts.seed, 0x5348u + i);
    const MultiEstimate m = integrate_mu_multi(
        model, slots + 1,
        [&](const Point& p, std::span<double> out) {
          if (!(std::abs(surface.G()(p)) < e)) return;
          std::vector<double> v(count, 0.0);
          fn(p, v);
          const Vector g = surface.G().gradient(p);
          for (std::size_t j = 0; j < projections.size(); ++j) {
            const int pm = projections[j];
            const double gn = pm == 0 ? g.norm() : g.head(pm).norm();
            for (std::size_t k = 0; k < count; ++k) out[j * count + k] = v[k] * gn / (2.0 * e);
          }
          out[slots] = 1.0;
        },
        q);
    const auto band = static_cast<std::size_t>(std::llround(m.estimates[slots].value * static_cast<double>(q.budget)));
    if (band < kMinBandHits) throw std::runtime_error("band undersampled");
    hits.push_back(band);
    for (std::size_t s = 0; s < slots; ++s) rungs[s].push_back(m.estimates[s]);
  }
  std::vector<ShellEstimate> out;
  for (std::size_t s = 0; s < slots; ++s) out.push_back(fit_shell(eps, rungs[s], hits));
  return out;
}

ShellEstimate surface_integral_shell(const GaussianModel& model, const LevelSetSurface& surface,
                                     const ScalarField& integrand, const ShellOptions& opts) {
  return surface_integral_shell_multi(
             model, surface, 1, [&](const Point& p, std::span<double> out) { out[0] = integrand(p); }, {0}, opts)
      .front();
}

// ---------------------------------------------------------------------------

MultiEstimate integrate_region_multi(const GaussianModel& model, const LevelSetSurface& surface, std::size_t count,
                                     const MultiIntegrand& fn, const QuadratureOptions& opts,
                                     const SurfaceQuadrature& q) {
  if (opts.method == Method::GaussHermite && surface.kind() == SurfaceKind::Hyperplane)
    return integrate_halfspace_multi(model, surface.normal(), surface.offset(), count, fn, opts);
  if (opts.method == Method::GaussHermite && surface.kind() == SurfaceKind::Ellipsoid) {
    const int n = model.dim();
    const auto& spec = model.spectrum();
    const double r = surface.radius();
    const Rule1D radial = gauss_legendre(q.radial_nodes, 0.0, r);
    std::vector<double> sums(count, 0.0);
    std::vector<double> values(count);
    std::size_t nodes = 0;
    std::size_t dropped = 0;
    auto visit = [&](const Point& y, double w) {
      ++nodes;
      std::fill(values.begin(), values.end(), 0.0);
      fn(y, values);
      for (double v : values) {
        if (std::isnan(v)) {
          ++dropped;
          return;
        }
      }
      for (std::size_t k = 0; k < count; ++k) sums[k] += w * values[k];
    };
    const double jac = inv_sqrt_det(spec);
    if (n == 1) {
      const Rule1D line = gauss_legendre(2 * q.radial_nodes, -r / std::sqrt(spec[0]), r / std::sqrt(spec[0]));
      for (std::size_t i = 0; i < line.nodes.size(); ++i) {
        const Point y = Point::Constant(1, line.nodes[i]);
        visit(y, line.weights[i] * gaussian_density(y));
      }
    } else {
      const SphereRule rule = sphere_rule(n, q.sphere_order);
      if (rule.nodes.size() * radial.nodes.size() > kMaxGhTensor)
        throw std::invalid_argument("region node budget overflow");
      Point y(n);
      for (std::size_t a = 0; a < radial.nodes.size(); ++a) {
        const double s = radial.nodes[a];
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          for (int k = 0; k < n; ++k) y[k] = s * rule.nodes[i][k] / std::sqrt(spec[static_cast<std::size_t>(k)]);
          visit(y, radial.weights[a] * std::pow(s, n - 1) * jac * rule.weights[i] * gaussian_density(y));
        }
      }
    }
    MultiEstimate out;
    for (std::size_t k = 0; k < count; ++k) {
      IntegralEstimate e;
      e.value = sums[k];
      e.method = Method::GaussHermite;
      e.n_eval = nodes;
      e.dropped = dropped;
      out.estimates.push_back(std::move(e));
      out.max_share.push_back(0.0);
    }
    return out;
  }
  if (opts.method != Method::MonteCarlo)
    throw std::invalid_argument("region integrals of custom surfaces support mc only");
  return integrate_mu_multi(
      model, count,
      [&](const Point& p, std::span<double> out) {
        if (surface.inside(p)) fn(p, out);
      },
      opts);
}

// ---------------------------------------------------------------------------

nlohmann::json Hypothesis2Report::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : moments) ms.push_back(m.to_json());
  nlohmann::json ex = nlohmann::json::array();
  for (double v : exact) ex.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  return {{"interior_mass", interior_mass.to_json()}, {"q", q_list}, {"moments", ms}, {"exact", ex}, {"pass", pass}};
}

Hypothesis2Report check_hypothesis2(const GaussianModel& model, const LevelSetSurface& surface,
                                    const std::vector<double>& q_list, std::size_t budget, std::uint64_t seed) {
  if (q_list.empty()) throw std::invalid_argument("check_hypothesis2: empty q list");
  Hypothesis2Report r;
  r.q_list = q_list;
  QuadratureOptions opts;
  opts.budget = budget;
  opts.seed = seed;
  r.interior_mass =
      integrate_mu(model, ScalarField([&surface](const Point& p) { return surface.inside(p) ? 1.0 : 0.0; }), opts);
  std::vector<std::string> names;
  for (double q : q_list) names.push_back("|grad G|^-" + format_double(q));
  const double delta = surface.delta();
  r.moments = moment_ladder(
      model, names,
      [&](const Point& p, std::span<double> out) {
        if (!(std::abs(surface.G()(p)) < delta)) return;
        const double g = surface.G().gradient(p).norm();
        for (std::size_t i = 0; i < q_list.size(); ++i) out[i] = g > 0.0 ? std::pow(g, -q_list[i]) : kNaN;
      },
      budget, seed);
  for (double q : q_list) {
    if (surface.kind() == SurfaceKind::Hyperplane) {
      const double len = surface.normal().norm();
      const double c = surface.offset();
      r.exact.push_back(std::pow(len, -q) * (normal_cdf((c + delta) / len) - normal_cdf((c - delta) / len)));
    } else {
      r.exact.push_back(kNaN);
    }
  }
  r.pass = r.interior_mass.value > 0.0;
  for (const auto& m : r.moments)
    if (m.diverging) r.pass = false;
  return r;
}

IdentityReport rho_monotonicity_check(const GaussianModel& model, const LevelSetSurface& surface,
                                      const ScalarField& indicator, int m1, int m2, const ShellOptions& opts) {
  if (!(m1 >= 1 && m1 <= m2 && m2 <= model.dim()))
    throw std::invalid_argument("rho_monotonicity_check: need 1 <= m1 <= m2 <= dim");
  const auto est = surface_integral_shell_multi(
      model, surface, 1, [&](const Point& p, std::span<double> out) { out[0] = indicator(p); }, {m1, m2}, opts);
  IdentityReport r;
  r.identity_id = "rho_monotonicity[m1=" + std::to_string(m1) + ";m2=" + std::to_string(m2) + "]";
  r.lhs = est[0].value;
  r.rhs = est[1].value;
  r.delta = r.lhs.value - r.rhs.value;
  r.tol = kSigmaMultiple * std::hypot(r.lhs.std_error, r.rhs.std_error);
  r.pass = std::isfinite(r.delta) && r.delta <= r.tol;
  r.detail["formula"] = "rho^F1(A) <= rho^F2(A) for F1 in F2";
  r.detail["surface"] = surface.to_json();
  r.detail["lhs_shell"] = est[0].to_json();
  r.detail["rhs_shell"] = est[1].to_json();
  return r;
}

}  // namespace wgsc
