#include "wgsc/traces.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace wgsc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void require_index(const GaussianModel& model, int k) {
  if (k < 0 || k >= model.dim()) throw std::out_of_range("basis index out of range");
}

/// Volume integrals against nu over {G < 0}.
MultiEstimate nu_region(const GaussianModel& model, const Weight& weight, const LevelSetSurface& surface,
                        std::size_t count, const MultiIntegrand& fn, const TraceOptions& opts) {
  return integrate_region_multi(
      model, surface, count,
      [&](const Point& p, std::span<double> out) {
        if (weight.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        fn(p, out);
        const double w = weight.w(p);
        for (double& v : out) v *= w;
      },
      opts.volume, opts.surface);
}

void describe(TraceReport& r, const LevelSetSurface& surface, const Weight* weight, const char* formula) {
  r.detail["formula"] = formula;
  r.detail["surface"] = surface.to_json();
  if (weight) {
    r.detail["weight"] = weight->to_json();
    if (!weight->exponents().l2_theory()) r.warnings.push_back("t < 2 s' for this weight");
  }
}

std::string tag(const char* base, int k) { return std::string(base) + "[k=" + std::to_string(k + 1) + "]"; }

}  // namespace

ScalarField trace(const LevelSetSurface& surface, const ScalarField& f) {
  (void)surface;
  return ScalarField(f.eval_fn(), {}, {}, f.singular_fn(), "trace");
}

std::vector<Point> surface_points(const GaussianModel& model, const LevelSetSurface& surface, std::size_t count,
                                  std::uint64_t seed) {
  std::vector<Point> pts = sample(model, count, seed);
  for (auto& p : pts) {
    switch (surface.kind()) {
      case SurfaceKind::Hyperplane: {
        const Vector& a = surface.normal();
        p -= (a.dot(p) - surface.offset()) / a.squaredNorm() * a;
        break;
      }
      case SurfaceKind::Ellipsoid:
        p *= surface.radius() / std::sqrt(model.ambient_norm_sq(p));
        break;
      case SurfaceKind::Custom:
        for (int it = 0; it < 50; ++it) {
          const double g = surface.G()(p);
          if (std::abs(g) < 1e-13) break;
          const Vector d = surface.G().gradient(p);
          p -= g / d.squaredNorm() * d;
        }
        break;
    }
  }
  return pts;
}

double trace_product_deviation(const LevelSetSurface& surface, const ScalarField& f, const ScalarField& g,
                               const std::vector<Point>& points) {
  const ScalarField tf = trace(surface, f);
  const ScalarField tg = trace(surface, g);
  const ScalarField tfg = trace(surface, product(f, g));
  double dev = 0.0;
  for (const auto& p : points) dev = std::max(dev, std::abs(tfg(p) - tf(p) * tg(p)));
  return dev;
}

std::vector<IntegralEstimate> surface_integral_multi(const GaussianModel& model, const LevelSetSurface& surface,
                                                     std::size_t count, const MultiIntegrand& fn,
                                                     const TraceOptions& opts) {
  const bool shell = opts.surface_method == SurfaceMethod::Shell ||
                     (opts.surface_method == SurfaceMethod::Auto && !surface.has_exact());
  if (!shell) return surface_integral_exact_multi(model, surface, count, fn, opts.surface);
  const auto est = surface_integral_shell_multi(model, surface, count, fn, {0}, opts.shell);
  std::vector<IntegralEstimate> out;
  for (const auto& e : est) out.push_back(e.value);
  return out;
}

TraceReport check_gauss_green(const GaussianModel& model, const Weight& weight, const LevelSetSurface& surface,
                              const ScalarField& phi, int k, const TraceOptions& opts) {
  require_index(model, k);
  const auto lhs = nu_region(
      model, weight, surface, 1,
      [&](const Point& p, std::span<double> out) {
        if (phi.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        const double v = phi(p);
        out[0] = phi.gradient(p)[k] + v * weight.grad_log_w(p)[k] - v * p[k];
      },
      opts);
  const auto rhs = surface_integral_multi(
      model, surface, 1,
      [&](const Point& p, std::span<double> out) {
        if (phi.is_singular(p) || weight.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        const Vector g = surface.G().gradient(p);
        out[0] = phi(p) * g[k] * weight.w(p) / g.norm();
      },
      opts);
  TraceReport r = compare(tag("gauss_green", k), lhs.estimates[0], rhs[0], opts.floor);
  describe(r, surface, &weight,
           "int_{G<0} (d_k phi + phi d_k log w - phi y_k) dnu = int_{G=0} phi d_k G w / |grad G| drho");
  return r;
}

TraceReport check_gauss_green_gaussian(const GaussianModel& model, const LevelSetSurface& surface,
                                       const ScalarField& phi, int k, const TraceOptions& opts) {
  require_index(model, k);
  const auto lhs = integrate_region_multi(
      model, surface, 1,
      [&](const Point& p, std::span<double> out) {
        if (phi.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        out[0] = phi.gradient(p)[k] - phi(p) * p[k];
      },
      opts.volume, opts.surface);
  const auto rhs = surface_integral_multi(
      model, surface, 1,
      [&](const Point& p, std::span<double> out) {
        const Vector g = surface.G().gradient(p);
        out[0] = phi(p) * g[k] / g.norm();
      },
      opts);
  TraceReport r = compare(tag("gauss_green_gaussian", k), lhs.estimates[0], rhs[0], opts.floor);
  describe(r, surface, nullptr, "int_{G<0} (d_k phi - phi y_k) dmu = int_{G=0} phi d_k G / |grad G| drho");
  return r;
}

TraceReport check_vector_gauss_green(const GaussianModel& model, const Weight& weight,
                                     const LevelSetSurface& surface, const VectorField& phi,
                                     const TraceOptions& opts) {
  const DivergenceResult div = div_nu(model, weight, phi);
  const auto lhs = nu_region(
      model, weight, surface, 1, [&](const Point& p, std::span<double> out) { out[0] = div.div_nu(p); }, opts);
  const auto rhs = surface_integral_multi(
      model, surface, 1,
      [&](const Point& p, std::span<double> out) {
        if (weight.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        const Vector g = surface.G().gradient(p);
        out[0] = phi(p).dot(g) * weight.w(p) / g.norm();
      },
      opts);
  TraceReport r = compare("vector_gauss_green", lhs.estimates[0], rhs[0], opts.floor);
  describe(r, surface, &weight, "int_{G<0} div_nu Phi dnu = int_{G=0} <Phi, grad G> w / |grad G| drho");
  r.detail["field"] = phi.label();
  return r;
}

std::pair<TraceReport, TraceReport> check_trace_q_identities(const GaussianModel& model, const Weight& weight,
                                                             const LevelSetSurface& surface, const ScalarField& phi,
                                                             double q, const TraceOptions& opts) {
  if (!(q >= 1.0)) throw std::invalid_argument("trace identities need q >= 1");
  const int n = model.dim();
  const DivergenceResult div_grad = div_nu(model, weight, gradient_field(surface.G(), n));
  const VectorField normal = normalized_gradient_field(surface.G(), n);
  const DivergenceResult div_normal = div_nu(model, weight, normal);
  const auto lhs = nu_region(
      model, weight, surface, 2,
      [&](const Point& p, std::span<double> out) {
        const double v = phi(p);
        if (phi.is_singular(p) || (q < 2.0 && v == 0.0)) {
          out[0] = kNaN;
          return;
        }
        const double a = std::abs(v);
        const double pref = q * sign_of(v) * std::pow(a, q - 1.0);  // q phi |phi|^{q-2}
        const double aq = std::pow(a, q);
        const Vector dphi = phi.gradient(p);
        const Vector g = surface.G().gradient(p);
        out[0] = pref * dphi.dot(g) + aq * div_grad.div_nu(p);
        out[1] = pref * dphi.dot(g) / g.norm() + aq * div_normal.div_nu(p);
      },
      opts);
  const auto rhs = surface_integral_multi(
      model, surface, 2,
      [&](const Point& p, std::span<double> out) {
        if (phi.is_singular(p) || weight.is_singular(p)) {
          out[0] = kNaN;
          return;
        }
        const double aq = std::pow(std::abs(phi(p)), q);
        const double w = weight.w(p);
        out[0] = aq * surface.G().gradient(p).norm() * w;
        out[1] = aq * w;
      },
      opts);
  const std::string qs = "[q=" + format_double(q) + "]";
  TraceReport first = compare("trace_q_grad" + qs, lhs.estimates[0], rhs[0], opts.floor);
  describe(first, surface, &weight,
           "int_{G<0} (q phi|phi|^{q-2} <grad phi, grad G> + |phi|^q div_nu grad G) dnu = "
           "int_{G=0} |phi|^q |grad G| w drho");
  TraceReport second = compare("trace_q_normal" + qs, lhs.estimates[1], rhs[1], opts.floor);
  describe(second, surface, &weight,
           "int_{G<0} (q phi|phi|^{q-2} <grad phi, N> + |phi|^q div_nu N) dnu = int_{G=0} |phi|^q w drho, "
           "N = grad G / |grad G|");
  if (weight.exponent_warning(q).size()) {
    first.warnings.push_back(weight.exponent_warning(q));
    second.warnings.push_back(weight.exponent_warning(q));
  }
  return {first, second};
}

std::vector<IntegralEstimate> trace_lq_norms(const GaussianModel& model, const Weight& weight,
                                             const LevelSetSurface& surface, const ScalarField& phi,
                                             const std::vector<double>& q_list, const TraceOptions& opts) {
  auto est = surface_integral_multi(
      model, surface, q_list.size(),
      [&](const Point& p, std::span<double> out) {
        const double a = std::abs(phi(p));
        const double w = weight.w(p);
        for (std::size_t i = 0; i < q_list.size(); ++i) out[i] = std::pow(a, q_list[i]) * w;
      },
      opts);
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double q = q_list[i];
    const double v = est[i].value;
    est[i].value = std::pow(v, 1.0 / q);
    est[i].std_error = v > 0.0 ? est[i].std_error * std::pow(v, 1.0 / q - 1.0) / q : 0.0;
  }
  return est;
}

}  // namespace wgsc
