#include "wgsc/registry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wgsc {

using nlohmann::json;

namespace {

constexpr int kMaxNameDepth = 16;

template <class T>
T param(const json& p, const char* key, T fallback) {
  return p.is_object() && p.contains(key) ? p.at(key).get<T>() : fallback;
}

double parse_number(const std::string& text, const std::string& spec) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError("field spec '" + spec + "': bad number '" + text + "'");
  return v;
}

int parse_index(const std::string& text, const std::string& spec, int dim) {
  const double v = parse_number(text, spec);
  const int k = static_cast<int>(v);
  if (k != v || k < 1 || k > dim)
    throw ConfigError("'" + spec + "': index must be an integer in 1.." + std::to_string(dim));
  return k - 1;
}

Vector to_vector(const json& j, int n, const char* what) {
  if (j.is_number()) return Vector::Constant(n, j.get<double>());
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != n)
    throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                      std::to_string(v.size()));
  return Eigen::Map<const Vector>(v.data(), n);
}

ScalarField bump_from(const json& spec, const GaussianModel& model) {
  const int n = model.dim();
  const double width = param(spec, "width", 1.0);
  if (!(width > 0.0)) throw ConfigError("bump: width must be positive");
  if (!spec.contains("functionals")) {
    const Vector c = spec.contains("center") ? to_vector(spec.at("center"), n, "bump.center") : Vector::Zero(n);
    return gaussian_bump(c, width);
  }
  const auto rows = spec.at("functionals").get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ConfigError("bump.functionals must not be empty");
  const int m = static_cast<int>(rows.size());
  Matrix L(m, n);
  for (int i = 0; i < m; ++i) L.row(i) = to_vector(json(rows[static_cast<std::size_t>(i)]), n, "bump.functionals row");
  const Vector c = spec.contains("center") ? to_vector(spec.at("center"), m, "bump.center") : Vector::Zero(m);
  const double w2 = width * width;
  OuterFunction outer;
  outer.value = [c, w2](const Vector& u) { return std::exp(-(u - c).squaredNorm() / (2.0 * w2)); };
  outer.gradient = [c, w2](const Vector& u) {
    const Vector d = u - c;
    return Vector(-std::exp(-d.squaredNorm() / (2.0 * w2)) / w2 * d);
  };
  outer.hessian = [c, w2](const Vector& u) {
    const Vector d = u - c;
    const double v = std::exp(-d.squaredNorm() / (2.0 * w2));
    return Matrix(v * (d * d.transpose() / (w2 * w2) - Matrix::Identity(d.size(), d.size()) / w2));
  };
  return cylindrical(std::move(outer), std::move(L));
}

ScalarField parse_field_impl(const json& spec, const GaussianModel& model, const json& named, int depth) {
  if (depth > kMaxNameDepth) throw ConfigError("field references nest too deeply (cycle?)");
  const int n = model.dim();
  if (spec.is_number()) return constant_field(spec.get<double>());
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    const auto colon = s.find(':');
    const std::string head = s.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string{} : s.substr(colon + 1);
    if (head == "constant" && !arg.empty()) return constant_field(parse_number(arg, s));
    if (head == "coordinate" && !arg.empty()) return coordinate_field(n, parse_index(arg, s, n));
    if (head == "norm_q" && !arg.empty()) {
      const double q = parse_number(arg, s);
      if (!(q > 1.0)) throw ConfigError("'" + s + "': q must exceed 1");
      return lq_norm_field(model, q);
    }
    if (head == "sup_norm_kl") {
      const int grid = arg.empty() ? 512 : static_cast<int>(parse_number(arg, s));
      if (grid < 2) throw ConfigError("'" + s + "': grid must be at least 2");
      return SupNormKL(model, grid).field();
    }
    if (s == "l2_norm") return l2_norm_field(model);
    if (s == "bump") return gaussian_bump(Vector::Zero(n), 1.0);
    if (named.is_object() && named.contains(s)) return parse_field_impl(named.at(s), model, named, depth + 1);
    throw ConfigError("unknown field '" + s + "'");
  }
  if (!spec.is_object() || spec.size() != 1) throw ConfigError("field spec must be a number, string or one-key object");
  const auto& [key, body] = *spec.items().begin();
  if (key == "bump") return bump_from(body, model);
  if (key == "poly") {
    std::vector<Monomial> terms;
    for (const auto& t : body) {
      Monomial m{t.at("c").get<double>(), t.at("e").get<std::vector<int>>()};
      if (static_cast<int>(m.exponents.size()) != n)
        throw ConfigError("poly: exponent vectors must have " + std::to_string(n) + " entries");
      if (std::any_of(m.exponents.begin(), m.exponents.end(), [](int e) { return e < 0; }))
        throw ConfigError("poly: exponents must be non-negative");
      terms.push_back(std::move(m));
    }
    return polynomial(n, std::move(terms));
  }
  if (key == "sum") {
    if (!body.is_array() || body.empty()) throw ConfigError("sum: expected a non-empty array");
    ScalarField acc = parse_field_impl(body.at(0), model, named, depth + 1);
    for (std::size_t i = 1; i < body.size(); ++i) acc = sum(acc, parse_field_impl(body.at(i), model, named, depth + 1));
    return acc;
  }
  if (key == "product") {
    if (!body.is_array() || body.size() != 2) throw ConfigError("product: expected two factors");
    return product(parse_field_impl(body.at(0), model, named, depth + 1),
                   parse_field_impl(body.at(1), model, named, depth + 1));
  }
  if (key == "scaled") return scaled(parse_field_impl(body.at("field"), model, named, depth + 1), body.at("by").get<double>());
  throw ConfigError("unknown field kind '" + key + "'");
}

std::vector<int> indices(const json& p, const char* key, int dim, bool all_default = true) {
  std::vector<int> out;
  if (!p.contains(key)) {
    if (all_default)
      for (int k = 0; k < dim; ++k) out.push_back(k);
    return out;
  }
  const json& v = p.at(key);
  if (v.is_string() && v.get<std::string>() == "all") {
    for (int k = 0; k < dim; ++k) out.push_back(k);
    return out;
  }
  const std::vector<int> raw = v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
  for (int k : raw) {
    if (k < 1 || k > dim) throw ConfigError(std::string(key) + ": index " + std::to_string(k) + " outside 1.." + std::to_string(dim));
    out.push_back(k - 1);
  }
  return out;
}

/// Widens the tolerance to rel * |rhs| when requested, then re-decides.
void apply_relative(std::vector<IdentityReport>& reports, const json& p) {
  const double rel = param(p, "rel_tol", 0.0);
  if (rel <= 0.0) return;
  for (auto& r : reports) {
    r.tol = std::max(r.tol, rel * std::abs(r.rhs.value));
    r.pass = std::isfinite(r.delta) && r.delta <= r.tol && r.lhs.dropped == 0 && r.rhs.dropped == 0;
  }
}

void relabel(std::vector<IdentityReport>& reports, const std::string& prefix) {
  if (prefix.empty()) return;
  for (auto& r : reports) r.identity_id = prefix + "/" + r.identity_id;
}

IdentityReport ladder_report(std::string id, const MomentLadder& m) {
  IdentityReport r;
  r.identity_id = std::move(id);
  const auto n = m.ladder.size();
  r.lhs = m.ladder.back();
  r.rhs = m.ladder[n >= 2 ? n - 2 : 0];
  r.delta = std::abs(r.lhs.value - r.rhs.value);
  r.tol = kLadderSigma * std::hypot(r.lhs.std_error, r.rhs.std_error);
  r.pass = !m.diverging;
  r.detail = m.to_json();
  if (m.diverging) r.warnings.push_back(m.reason);
  return r;
}

std::string qtag(const char* base, double q) { return std::string(base) + "[q=" + format_double(q) + "]"; }

// ---------------------------------------------------------------------------
// Checks.

CheckOutput run_ibp(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto f = c.field(param(p, "f", json("bump")));
  const auto opts = c.quadrature(p);
  for (int h : indices(p, "h", c.model.dim())) out.reports.push_back(check_ibp(c.model, c.weight, f, h, opts, c.floor("ibp", p)));
  return out;
}

CheckOutput run_bilinear(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto f = c.field(param(p, "f", json("coordinate:1")));
  const auto g = c.field(param(p, "g", param(p, "f", json("coordinate:1"))));
  const auto pairs = param(p, "pairs", std::vector<std::vector<int>>{{1, 1}, {1, 2}});
  const auto opts = c.quadrature(p);
  for (const auto& hk : pairs) {
    if (hk.size() != 2) throw ConfigError("bilinear.pairs: each entry must be [h, k]");
    for (int i : hk)
      if (i < 1 || i > c.model.dim()) throw ConfigError("bilinear.pairs: index outside 1..dim");
    out.reports.push_back(
        bilinear_identity_check(c.model, c.weight, f, g, hk[0] - 1, hk[1] - 1, opts, c.floor("bilinear", p)));
  }
  return out;
}

CheckOutput run_energy(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto phi = c.vector_field(param(p, "Phi", json("gradient:bump")));
  out.reports.push_back(energy_identity_check(c.model, c.weight, phi, c.quadrature(p), c.floor("energy", p)));
  return out;
}

CheckOutput run_adjoint(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto f = c.field(param(p, "f", json("bump")));
  const auto phi = c.vector_field(param(p, "Phi", json("gradient:bump")));
  out.reports.push_back(adjointness_check(c.model, c.weight, f, phi, c.quadrature(p), c.floor("adjoint", p)));
  return out;
}

CheckOutput run_l2_bound(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto phi = c.vector_field(param(p, "Phi", json("gradient:bump")));
  double C = param(p, "C", std::numeric_limits<double>::quiet_NaN());
  if (std::isnan(C)) {
    const auto screen = condition_41_screen(c.model, c.weight, param<std::size_t>(p, "samples", 20'000), c.seed_of(p));
    C = screen.c_max_estimate;
    out.detail["screen"] = screen.to_json();
  }
  out.reports.push_back(l2_bound_check(c.model, c.weight, phi, C, c.quadrature(p)));
  return out;
}

CheckOutput run_condition_41(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto candidates = param(p, "candidates", std::vector<double>{1.5, 2.0, 5.0, 10.0});
  const auto res = condition_41_screen(c.model, c.weight, param<std::size_t>(p, "samples", 20'000), c.seed_of(p),
                                       candidates, param(p, "radius", 0.5));
  out.detail = res.to_json();
  if (c.weight.kind() == "gaussian_type") {
    // Constant Hessian 2 lambda diag(lambda_i): the top eigenvalue of I - H is exact.
    const double lambda = c.weight.params().at("lambda").get<double>();
    const double exact = lambda >= 0.0 ? 1.0 - 2.0 * lambda * c.model.min_eigenvalue()
                                       : 1.0 - 2.0 * lambda * c.model.max_eigenvalue();
    const double tol = param(p, "constant_tol", 1e-12);
    const double d = std::abs(res.c_max_estimate - exact);
    out.reports.push_back(verdict("condition_41_constant", res.c_max_estimate, exact, tol, d <= tol));
  }
  const bool witness_set = param(p, "witness_set", true);
  for (const auto& cand : res.candidates) {
    const std::string tag = "[C=" + format_double(cand.C) + "]";
    auto v = verdict("condition_41_violation" + tag, cand.eigenvalue, cand.C, 0.0, cand.violated);
    v.detail = cand.to_json();
    out.reports.push_back(std::move(v));
    if (witness_set) {
      auto s = verdict("condition_41_witness_set" + tag, cand.in_witness_set ? 1.0 : 0.0, 1.0, 0.0,
                       cand.violated && cand.in_witness_set);
      s.detail = {{"trials", res.witness_set_trials}, {"hits", res.witness_set_hits}, {"radius", res.radius}};
      if (res.witness_set_hits == 0) s.warnings.push_back("no sampled point satisfied the set's defining inequality");
      out.reports.push_back(std::move(s));
    }
  }
  return out;
}

CheckOutput run_gauss_green(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto& s = c.require_surface("gauss_green");
  const auto phi = c.field(param(p, "phi", json("constant:1")));
  const auto opts = c.trace_options("gauss_green", p);
  for (int k : indices(p, "k", c.model.dim())) out.reports.push_back(check_gauss_green(c.model, c.weight, s, phi, k, opts));
  apply_relative(out.reports, p);
  return out;
}

CheckOutput run_gauss_green_hyperplane(const CheckContext& c, const json& p) {
  CheckOutput out;
  const int n = c.model.dim();
  const LevelSetSurface s = c.surface && c.surface->kind() == SurfaceKind::Hyperplane
                                ? *c.surface
                                : LevelSetSurface::hyperplane(c.model, Vector::Unit(n, 0), 0.0);
  json q = p;
  if (!q.contains("floor")) q["floor"] = 1e-6;
  if (!q.contains("gh_nodes")) q["gh_nodes"] = 16;
  const auto opts = c.trace_options("gauss_green_hyperplane", q);
  std::vector<Weight> weights{unit_weight(c.model)};
  if (c.weight.kind() != "unit") weights.push_back(c.weight);
  const std::vector<std::pair<std::string, json>> phis{{"1", json("constant:1")}, {"bump", param(p, "bump", json("bump"))}};
  for (const auto& w : weights)
    for (const auto& [label, spec] : phis) {
      const auto phi = c.field(spec);
      std::vector<IdentityReport> rows;
      for (int k = 0; k < n; ++k) rows.push_back(check_gauss_green(c.model, w, s, phi, k, opts));
      relabel(rows, w.kind() + "," + label);
      for (auto& r : rows) out.reports.push_back(std::move(r));
    }
  // phi = 1, unit weight: -int_{<a,y> < c} y_k dmu = (a_k / |a|) phi_1(c / |a|).
  const Vector& a = s.normal();
  int k = 0;
  a.cwiseAbs().maxCoeff(&k);
  const double closed = a[k] / a.norm() * normal_pdf(s.offset() / a.norm());
  const auto& lhs = out.reports[static_cast<std::size_t>(k)].lhs;  // unit weight, phi = 1, direction k
  const double rel = param(p, "closed_form_rel", 0.005);
  auto r = verdict("closed_form[k=" + std::to_string(k + 1) + "]", lhs.value, closed, rel * std::abs(closed),
                   std::abs(lhs.value - closed) <= rel * std::abs(closed));
  r.lhs = lhs;
  out.reports.push_back(std::move(r));
  out.detail["surface"] = s.to_json();
  return out;
}

CheckOutput run_vector_gauss_green(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto& s = c.require_surface("vector_gauss_green");
  const auto phi = c.vector_field(param(p, "Phi", json("basis:1")));
  out.reports.push_back(check_vector_gauss_green(c.model, c.weight, s, phi, c.trace_options("vector_gauss_green", p)));
  apply_relative(out.reports, p);
  return out;
}

CheckOutput run_trace_q(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto& s = c.require_surface("trace_q");
  const auto phi = c.field(param(p, "phi", json("bump")));
  const auto opts = c.trace_options("trace_q", p);
  for (double q : param(p, "q", std::vector<double>{1.0, 2.0})) {
    if (!(q >= 1.0)) throw ConfigError("trace_q: q must be at least 1");
    auto [first, second] = check_trace_q_identities(c.model, c.weight, s, phi, q, opts);
    out.reports.push_back(std::move(first));
    out.reports.push_back(std::move(second));
  }
  apply_relative(out.reports, p);
  return out;
}

CheckOutput run_surface_measure(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto& s = c.require_surface("surface_measure");
  if (!s.has_exact()) throw ConfigError("surface_measure needs a hyperplane or sphere surface");
  const bool unit_integrand = !p.contains("integrand");
  const auto f = c.field(param(p, "integrand", json("constant:1")));
  SurfaceQuadrature sq;
  sq.gh_nodes = param(p, "gh_nodes", sq.gh_nodes);
  const auto exact = surface_integral_exact(c.model, s, f, sq);
  if (unit_integrand) {
    const int n = c.model.dim();
    const bool isotropic = std::all_of(c.model.spectrum().begin(), c.model.spectrum().end(),
                                       [](double l) { return l == 1.0; });
    double closed = std::numeric_limits<double>::quiet_NaN();
    if (s.kind() == SurfaceKind::Hyperplane) {
      closed = normal_pdf(s.offset() / s.normal().norm());
    } else if (isotropic) {
      const double r = s.radius();
      const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
      closed = area * std::pow(r, n - 1) * std::pow(2.0 * std::numbers::pi, -0.5 * n) * std::exp(-0.5 * r * r);
    }
    if (!std::isnan(closed)) {
      const double tol = param(p, "exact_tol", 1e-8);
      auto r = verdict("surface_measure_exact", exact.value, closed, tol, std::abs(exact.value - closed) <= tol);
      r.lhs = exact;
      out.reports.push_back(std::move(r));
    }
  }
  if (param(p, "shell", true)) {
    ShellOptions so;
    so.budget = c.budget_of(p);
    so.seed = c.seed_of(p);
    const auto sh = surface_integral_shell(c.model, s, f, so);
    auto r = compare("surface_measure_shell", sh.value, exact, c.floor("surface_measure", p));
    r.detail = sh.to_json();
    if (!sh.epsilon_consistent) r.warnings.push_back("smallest shell rungs disagree beyond the fitted increment");
    out.reports.push_back(std::move(r));
  }
  return out;
}

CheckOutput run_rho_monotonicity(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto& s = c.require_surface("rho_monotonicity");
  const auto ind = c.field(param(p, "indicator", json("constant:1")));
  ShellOptions so;
  so.budget = c.budget_of(p);
  so.seed = c.seed_of(p);
  const int n = c.model.dim();
  for (const auto& m : param(p, "pairs", std::vector<std::vector<int>>{{1, n}})) {
    if (m.size() != 2 || m[0] < 1 || m[1] > n || m[0] > m[1])
      throw ConfigError("rho_monotonicity.pairs: each entry must be [m1, m2] with 1 <= m1 <= m2 <= dim");
    out.reports.push_back(rho_monotonicity_check(c.model, s, ind, m[0], m[1], so));
  }
  return out;
}

CheckOutput run_hypothesis1(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto rep = check_hypothesis1(c.weight, c.model, c.budget_of(p), c.seed_of(p));
  out.detail = rep.to_json();
  const std::string expect = param(p, "expect", std::string("finite"));
  if (expect == "finite") {
    for (std::size_t i = 0; i < std::min<std::size_t>(4, rep.moments.size()); ++i)
      out.reports.push_back(ladder_report("hypothesis1[" + rep.moments[i].name + "]", rep.moments[i]));
    for (auto& r : out.reports) r.warnings.insert(r.warnings.end(), rep.warnings.begin(), rep.warnings.end());
  } else if (expect == "divergent") {
    const auto flagged = std::count_if(rep.moments.begin(), rep.moments.begin() + std::min<std::ptrdiff_t>(4, rep.moments.size()),
                                       [](const MomentLadder& m) { return m.diverging; });
    out.reports.push_back(verdict("hypothesis1_divergence", static_cast<double>(flagged), 1.0, 0.0, !rep.pass));
  } else {
    throw ConfigError("hypothesis1.expect must be 'finite' or 'divergent'");
  }
  return out;
}

CheckOutput run_hypothesis2(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto& s = c.require_surface("hypothesis2");
  const auto q_list = param(p, "q", std::vector<double>{1.5, 2.0, 4.0, 8.0});
  const auto rep = check_hypothesis2(c.model, s, q_list, c.budget_of(p), c.seed_of(p));
  out.detail = rep.to_json();
  auto mass = verdict("hypothesis2_interior", rep.interior_mass.value, 0.0, 0.0, rep.interior_mass.value > 0.0);
  mass.lhs = rep.interior_mass;
  out.reports.push_back(std::move(mass));
  for (std::size_t i = 0; i < rep.moments.size(); ++i) {
    const auto& m = rep.moments[i];
    if (std::isnan(rep.exact[i])) {
      out.reports.push_back(ladder_report(qtag("hypothesis2", q_list[i]), m));
    } else {
      IntegralEstimate exact;
      exact.value = rep.exact[i];
      exact.method = Method::Exact;
      auto r = compare(qtag("hypothesis2", q_list[i]), m.ladder.back(), exact, c.floor("hypothesis2", p));
      r.pass = r.pass && !m.diverging;
      r.detail = m.to_json();
      out.reports.push_back(std::move(r));
    }
  }
  return out;
}

double fd_tolerance(const Weight& w, const json& p) {
  return param(p, "tol", w.kind() == "sup_norm_kl" ? 1e-3 : 1e-5);
}

std::vector<Point> regular_points(const CheckContext& c, const json& p) {
  return sample(c.model, param<std::size_t>(p, "points", 1000), c.seed_of(p));
}

IdentityReport fd_report(std::string id, const DerivativeCheck& d, double tol) {
  auto r = verdict(std::move(id), d.max_rel_error, 0.0, tol, d.checked > 0 && d.max_rel_error <= tol);
  r.detail = {{"checked", d.checked}, {"skipped", d.skipped}};
  return r;
}

CheckOutput run_gradient_fd(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto pts = regular_points(c, p);
  std::vector<Weight> weights{c.weight};
  if (p.contains("weights"))
    for (const auto& spec : p.at("weights")) weights.push_back(Weight::from_json(spec, c.model));
  for (const auto& w : weights) {
    const double tol = fd_tolerance(w, p);
    out.reports.push_back(fd_report("gradient_fd[log_w=" + w.kind() + "]", check_gradient_fd(w.log_w_field(), pts), tol));
    if (w.has_hessian())
      out.reports.push_back(fd_report("hessian_fd[log_w=" + w.kind() + "]", check_hessian_fd(w.log_w_field(), pts), tol));
  }
  std::vector<LevelSetSurface> surfaces;
  if (c.surface) surfaces.push_back(*c.surface);
  if (p.contains("surfaces"))
    for (const auto& spec : p.at("surfaces")) surfaces.push_back(parse_surface(spec, c.model, c.fields));
  const double tol = param(p, "tol", 1e-5);
  for (const auto& s : surfaces) {
    out.reports.push_back(fd_report("gradient_fd[G=" + s.label() + "]", check_gradient_fd(s.G(), pts), tol));
    if (s.G().has_hessian())
      out.reports.push_back(fd_report("hessian_fd[G=" + s.label() + "]", check_hessian_fd(s.G(), pts), tol));
  }
  if (p.contains("fields"))
    for (const auto& spec : p.at("fields"))
      out.reports.push_back(fd_report("gradient_fd[" + (spec.is_string() ? spec.get<std::string>() : spec.dump()) + "]",
                                      check_gradient_fd(c.field(spec), pts), tol));
  return out;
}

std::vector<std::pair<std::string, RealFunction>> theta_battery() {
  return {
      {"identity", {[](double t) { return t; }, [](double) { return 1.0; }, [](double) { return 0.0; }}},
      {"sin", {[](double t) { return std::sin(t); }, [](double t) { return std::cos(t); }, {}}},
      {"atan", {[](double t) { return std::atan(t); }, [](double t) { return 1.0 / (1.0 + t * t); }, {}}},
      {"cubic", {[](double t) { return t * t * t / 3.0 + t; }, [](double t) { return t * t + 1.0; }, {}}},
  };
}

json default_rule_fields(int dim) {
  json f = json::array({"bump", "coordinate:1", json{{"sum", json::array({"coordinate:1", "constant:-0.3"})}}});
  if (dim >= 2) f.push_back(json{{"product", json::array({"coordinate:1", "coordinate:2"})}});
  return f;
}

std::string spec_name(const json& spec) { return spec.is_string() ? spec.get<std::string>() : spec.dump(); }

CheckOutput run_chain_rule(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto pts = regular_points(c, p);
  const double tol = param(p, "tol", 1e-6);
  for (const auto& spec : param(p, "fields", default_rule_fields(c.model.dim()))) {
    const auto f = c.field(spec);
    for (const auto& [name, theta] : theta_battery())
      out.reports.push_back(fd_report("chain_rule[" + spec_name(spec) + ";" + name + "]", chain_rule_check(theta, f, pts), tol));
  }
  return out;
}

CheckOutput run_modulus_rule(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto pts = regular_points(c, p);
  const double tol = param(p, "tol", 1e-6);
  for (const auto& spec : param(p, "fields", default_rule_fields(c.model.dim())))
    out.reports.push_back(fd_report("modulus_rule[" + spec_name(spec) + "]",
                                    modulus_rule_check(c.field(spec), pts, param(p, "exclusion", 1e-4)), tol));
  return out;
}

CheckOutput run_product_rule(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto pts = regular_points(c, p);
  const double tol = param(p, "tol", 1e-6);
  const auto pairs = param(p, "pairs", json::array({json::array({"bump", "coordinate:1"})}));
  for (const auto& pr : pairs) {
    if (!pr.is_array() || pr.size() != 2) throw ConfigError("product_rule.pairs: each entry must be [f, g]");
    out.reports.push_back(fd_report("product_rule[" + spec_name(pr[0]) + "*" + spec_name(pr[1]) + "]",
                                    product_rule_check(c.field(pr[0]), c.field(pr[1]), pts), tol));
  }
  if (c.surface) {
    const auto sp = surface_points(c.model, *c.surface, param<std::size_t>(p, "points", 1000), c.seed_of(p));
    const auto f = c.field(pairs.at(0).at(0));
    const auto g = c.field(pairs.at(0).at(1));
    const double dev = trace_product_deviation(*c.surface, f, g, sp);
    out.reports.push_back(verdict("trace_product", dev, 0.0, 1e-12, dev <= 1e-12));
  }
  return out;
}

CheckOutput run_fernique(const CheckContext& c, const json& p) {
  CheckOutput out;
  const auto g = c.field(param(p, "g", json("norm_q:1.5")));
  const double p_hom = param(p, "p", 1.0);
  const std::size_t budget = c.budget_of(p);
  const auto fr = fernique_alpha(g, p_hom, c.model, budget, c.seed_of(p), param(p, "alpha_max", 10.0));
  out.detail["fernique"] = fr.to_json();
  const double k = std::sqrt(std::pow(2.0, p_hom)) - 1.0;
  const double lhs = std::log((1.0 - fr.c) / fr.c) + 2.0 * fr.alpha * fr.tau * fr.tau / (k * k);
  if (!fr.clamped)
    out.reports.push_back(verdict("fernique_alpha", lhs, -0.1, 1e-12, lhs <= -0.1 + 1e-12 && fr.alpha > 0.0));
  const double alpha = fr.alpha;
  const auto ladder = moment_ladder(
      c.model, {"exp(alpha g^2)"},
      [&](const Point& x, std::span<double> o) {
        const double v = g(x);
        o[0] = std::exp(alpha * v * v);
      },
      budget, mix_seed(c.seed_of(p), 0x4645), 2);
  out.reports.push_back(ladder_report("fernique_integrability", ladder[0]));
  return out;
}

CheckOutput run_moment_formula(const CheckContext& c, const json& p) {
  CheckOutput out;
  const double rel = param(p, "rel_tol", 0.005);
  for (double q : param(p, "q", std::vector<double>{1.5})) {
    const auto mf = moment_formula(c.model, q, c.budget_of(p), c.seed_of(p));
    const double closed = mf.closed_form.back();
    auto r = verdict(qtag("moment_formula", q), mf.partial_sums.back().value, closed, rel * closed,
                     std::abs(mf.partial_sums.back().value - closed) <= rel * closed);
    r.lhs = mf.partial_sums.back();
    r.detail = mf.to_json();
    out.reports.push_back(std::move(r));
    bool structured = true;
    for (std::size_t i = 0; i < mf.closed_form.size(); ++i) {
      if (i > 0 && !(mf.closed_form[i] > mf.closed_form[i - 1])) structured = false;
      if (i > 0 && !(mf.partial_sums[i].value > mf.partial_sums[i - 1].value)) structured = false;
      if (mf.closed_form[i] > mf.tail_bound) structured = false;
    }
    out.reports.push_back(verdict(qtag("moment_formula_bound", q), closed, mf.tail_bound, 0.0, structured));
  }
  return out;
}

std::vector<CheckInfo> build_registry() {
  return {
      {"ibp", "weighted integration by parts", "int d_h f dnu = int f (y_h - d_h log w) dnu",
       "f = \"bump\", h = \"all\" (1-based), method, budget, seed, gh_nodes, floor", run_ibp},
      {"bilinear", "bilinear identity",
       "int (f y_h - f d_h log w - d_h f)(g y_k - g d_k log w - d_k g) dnu = delta_hk int fg dnu - int fg d_hk log w dnu + "
       "int d_k f d_h g dnu",
       "f = \"coordinate:1\", g = f, pairs = [[1,1],[1,2]], method, budget, seed, floor", run_bilinear},
      {"energy", "energy identity",
       "int (div_nu Phi)^2 dnu = int sum_ij (delta_ij - d_ij log w) phi_i phi_j dnu + int trace((grad Phi)^2) dnu",
       "Phi = \"gradient:bump\", method, budget, seed, floor", run_energy},
      {"adjoint", "divergence as adjoint of the gradient", "int <grad f, Phi> dnu = -int f div_nu Phi dnu",
       "f = \"bump\", Phi = \"gradient:bump\", method, budget, seed, floor", run_adjoint},
      {"l2_bound", "L^2 bound of the divergence", "||div_nu Phi||_{L^2(nu)} <= max(sqrt C, 1) ||Phi||_{W^{1,2}(nu)}",
       "Phi = \"gradient:bump\", C (default: screened sup), samples = 20000, method, budget, seed", run_l2_bound},
      {"condition_41", "uniform bound I - hess log w <= C",
       "sum_ij (delta_ij - d_ij log w(x)) xi_i xi_j <= C sum_i xi_i^2 for all x, xi",
       "candidates = [1.5,2,5,10], samples = 20000, radius = 0.5, witness_set = true, constant_tol = 1e-12", run_condition_41},
      {"gauss_green", "Gauss-Green formula with traces",
       "int_{G<0} (d_k phi + phi d_k log w - phi y_k) dnu = int_{G=0} Tr(phi d_k G) w / |grad G| drho",
       "phi = \"constant:1\", k = \"all\", surface_method = auto|exact|shell, rel_tol, method, budget, seed, floor",
       run_gauss_green},
      {"gauss_green_hyperplane", "Gauss-Green battery on a hyperplane",
       "gauss_green for unit and configured weight, phi in {1, bump}, all k; phi = 1 against (a_k/|a|) phi_1(c/|a|)",
       "bump = \"bump\", floor = 1e-6, gh_nodes = 16, closed_form_rel = 0.005, method, budget, seed",
       run_gauss_green_hyperplane},
      {"vector_gauss_green", "vector Gauss-Green formula",
       "int_{G<0} div_nu Phi dnu = int_{G=0} <Tr Phi, grad G> w / |grad G| drho",
       "Phi = \"basis:1\", surface_method, rel_tol, method, budget, seed, floor", run_vector_gauss_green},
      {"trace_q", "trace identities for |phi|^q",
       "int_{G<0} (q phi|phi|^{q-2} <grad phi, V> + |phi|^q div_nu V) dnu = int_{G=0} |phi|^q <V, N> w drho, V in {grad G, "
       "grad G / |grad G|}",
       "phi = \"bump\", q = [1,2], surface_method, rel_tol, method, budget, seed, floor", run_trace_q},
      {"surface_measure", "Gaussian surface measure",
       "rho(G = 0) by exact parametrization against closed forms, and the co-area shell estimate against it",
       "integrand = \"constant:1\", exact_tol = 1e-8, shell = true, gh_nodes, budget, seed, floor", run_surface_measure},
      {"rho_monotonicity", "monotonicity of rho^F in F", "rho^{F_1}(A) <= rho^{F_2}(A) for F_1 subset F_2",
       "indicator = \"constant:1\", pairs = [[1,dim]], budget, seed", run_rho_monotonicity},
      {"hypothesis1", "weight integrability",
       "w in W^{1,s}(mu), log w in W^{2,t}(mu): finite int w^s, |grad w|^s, |log w|^t, |grad log w|^t",
       "expect = finite|divergent, budget, seed", run_hypothesis1},
      {"hypothesis2", "level-set regularity", "mu(G < 0) > 0 and int_{|G|<delta} |grad G|^{-q} dmu < inf",
       "q = [1.5,2,4,8], budget, seed, floor", run_hypothesis2},
      {"gradient_fd", "analytic vs finite-difference derivatives",
       "max ||grad_analytic - grad_fd|| / max(||grad_fd||, 1) <= tol on sampled points",
       "points = 1000, weights = [], surfaces = [], fields = [], tol (1e-5; 1e-3 for sup_norm_kl), seed", run_gradient_fd},
      {"chain_rule", "chain rule", "grad(theta o phi) = theta'(phi) grad phi",
       "fields = [bump, coordinate:1, ...], points = 1000, tol = 1e-6, seed", run_chain_rule},
      {"modulus_rule", "modulus rule", "grad |u| = sign(u) grad u away from {u = 0}",
       "fields = [...], points = 1000, exclusion = 1e-4, tol = 1e-6, seed", run_modulus_rule},
      {"product_rule", "product rule and trace of products", "grad(fg) = f grad g + g grad f; Tr(fg) = Tr f Tr g",
       "pairs = [[bump, coordinate:1]], points = 1000, tol = 1e-6, seed", run_product_rule},
      {"fernique", "exponential square integrability of a seminorm",
       "log((1-c)/c) + 2 alpha tau^2 / (sqrt(2^p) - 1)^2 <= -0.1 with c = mu(g <= tau), then int exp(alpha g^2) dmu < inf",
       "g = \"norm_q:1.5\", p = 1, alpha_max = 10, budget, seed", run_fernique},
      {"moment_formula", "moments of the ambient coordinates",
       "sum_{i<=n} E|(x, v_i)|^q = c_q sum_{i<=n} lambda_i^{q/2}, c_q = 2^{q/2} Gamma((q+1)/2) / sqrt(pi)",
       "q = [1.5], rel_tol = 0.005, budget, seed", run_moment_formula},
  };
}

}  // namespace

ScalarField parse_field(const json& spec, const GaussianModel& model, const json& named) {
  return parse_field_impl(spec, model, named, 0);
}

VectorField parse_vector_field(const json& spec, const GaussianModel& model,
                               const std::optional<LevelSetSurface>& surface, const json& named) {
  const int n = model.dim();
  if (spec.is_string()) {
    const std::string s = spec.get<std::string>();
    if (s.rfind("gradient:", 0) == 0) return gradient_field(parse_field(json(s.substr(9)), model, named), n);
    if (s.rfind("basis:", 0) == 0) return constant_vector_field(Vector::Unit(n, parse_index(s.substr(6), s, n)));
    if (s == "grad_G" || s == "normal_G") {
      if (!surface) throw ConfigError("'" + s + "' needs a surface in the config");
      return s == "grad_G" ? gradient_field(surface->G(), n) : normalized_gradient_field(surface->G(), n);
    }
    if (named.is_object() && named.contains(s)) return parse_vector_field(named.at(s), model, surface, named);
    throw ConfigError("unknown vector field '" + s + "'");
  }
  if (!spec.is_object() || spec.size() != 1) throw ConfigError("vector field spec must be a string or one-key object");
  const auto& [key, body] = *spec.items().begin();
  if (key == "vector") {
    if (!body.is_array() || static_cast<int>(body.size()) != n)
      throw ConfigError("vector: expected " + std::to_string(n) + " component specs");
    std::vector<ScalarField> comps;
    for (const auto& c : body) comps.push_back(parse_field(c, model, named));
    return VectorField(std::move(comps), "vector");
  }
  if (key == "gradient") return gradient_field(parse_field(body, model, named), n);
  if (key == "constant_vector") return constant_vector_field(to_vector(body, n, "constant_vector"));
  throw ConfigError("unknown vector field kind '" + key + "'");
}

LevelSetSurface parse_surface(const json& spec, const GaussianModel& model, const json& named) {
  if (!spec.is_object()) throw ConfigError("surface spec must be an object");
  const std::string kind = spec.at("kind").get<std::string>();
  const double delta = param(spec, "delta", 0.1);
  if (!(delta > 0.0)) throw ConfigError("surface.delta must be positive");
  if (kind == "hyperplane") {
    const Vector a = to_vector(spec.at("normal"), model.dim(), "surface.normal");
    if (a.norm() == 0.0) throw ConfigError("surface.normal must be nonzero");
    return LevelSetSurface::hyperplane(model, a, param(spec, "offset", 0.0), delta);
  }
  if (kind == "sphere") {
    const double r = param(spec, "radius", 1.0);
    if (!(r > 0.0)) throw ConfigError("surface.radius must be positive");
    return LevelSetSurface::sphere(model, r, delta);
  }
  if (kind == "l2_path_sphere") return LevelSetSurface::l2_path_sphere(model, delta);
  if (kind == "custom")
    return LevelSetSurface::custom(parse_field(spec.at("field"), model, named), delta, param(spec, "label", std::string("custom")));
  throw ConfigError("unknown surface kind '" + kind + "'");
}

const LevelSetSurface& CheckContext::require_surface(std::string_view check) const {
  if (!surface) throw ConfigError(std::string(check) + " needs a surface in the config");
  return *surface;
}

std::size_t CheckContext::budget_of(const json& params) const { return param(params, "budget", budget); }
std::uint64_t CheckContext::seed_of(const json& params) const { return param(params, "seed", seed); }

QuadratureOptions CheckContext::quadrature(const json& params) const {
  QuadratureOptions o;
  const std::string m = param(params, "method", method);
  if (m == "auto")
    o.method = model.dim() <= 4 ? Method::GaussHermite : Method::MonteCarlo;
  else
    o.method = method_from_string(m);
  o.budget = budget_of(params);
  o.seed = seed_of(params);
  o.gh_nodes = param(params, "gh_nodes", o.gh_nodes);
  return o;
}

TraceOptions CheckContext::trace_options(const std::string& check, const json& params) const {
  TraceOptions o;
  o.volume = quadrature(params);
  const std::string sm = param(params, "surface_method", std::string("auto"));
  if (sm == "auto")
    o.surface_method = SurfaceMethod::Auto;
  else if (sm == "exact")
    o.surface_method = SurfaceMethod::Exact;
  else if (sm == "shell")
    o.surface_method = SurfaceMethod::Shell;
  else
    throw ConfigError("surface_method must be auto, exact or shell");
  o.surface.gh_nodes = param(params, "gh_nodes", o.surface.gh_nodes);
  o.shell.budget = param(params, "shell_budget", o.volume.budget);
  o.shell.seed = mix_seed(o.volume.seed, 0x7368);
  o.floor = floor(check, params);
  return o;
}

double CheckContext::floor(const std::string& check, const json& params) const {
  if (params.is_object() && params.contains("floor")) return params.at("floor").get<double>();
  if (tolerance.contains(check)) return tolerance.at(check).get<double>();
  if (tolerance.contains("floor")) return tolerance.at("floor").get<double>();
  return kDefaultFloor;
}

const std::vector<CheckInfo>& check_registry() {
  static const std::vector<CheckInfo> registry = build_registry();
  return registry;
}

const CheckInfo* find_check(std::string_view id) {
  for (const auto& c : check_registry())
    if (c.id == id) return &c;
  return nullptr;
}

}  // namespace wgsc
