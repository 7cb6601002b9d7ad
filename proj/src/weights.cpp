#include "wgsc/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace wgsc {

void Exponents::validate() const {
  if (!(s > 1.0)) throw std::invalid_argument("weight exponent s must exceed 1");
  if (!(t > s_conj())) throw std::invalid_argument("weight exponent t must exceed s' = s/(s-1)");
}

Weight::Weight(std::string kind, ScalarField w, ScalarField log_w, Exponents exponents, nlohmann::json params)
    : kind_(std::move(kind)),
      w_(std::move(w)),
      log_w_(std::move(log_w)),
      exponents_(exponents),
      params_(std::move(params)) {
  if (!w_.valid() || !log_w_.valid()) throw std::invalid_argument("Weight: w and log w are required");
  exponents_.validate();
}

Matrix Weight::hess_log_w(const Point& p) const { return log_w_.hessian(p); }

std::string Weight::exponent_warning(double p) const {
  if (p >= exponents_.p_min()) return {};
  return "exponent p = " + std::to_string(p) + " is below p_min = " + std::to_string(exponents_.p_min());
}

nlohmann::json Weight::to_json() const {
  nlohmann::json j = params_.is_object() ? params_ : nlohmann::json::object();
  j["kind"] = kind_;
  j["s"] = exponents_.s;
  j["t"] = exponents_.t;
  j["s_conj"] = exponents_.s_conj();
  j["p_min"] = exponents_.p_min();
  j["l2_theory"] = exponents_.l2_theory();
  return j;
}

Weight Weight::from_json(const nlohmann::json& spec, const GaussianModel& model) {
  const std::string kind = spec.at("kind").get<std::string>();
  auto exponents = [&](Exponents def) {
    if (spec.contains("s")) def.s = spec.at("s").get<double>();
    if (spec.contains("t")) def.t = spec.at("t").get<double>();
    return def;
  };
  if (kind == "unit") return unit_weight(model);
  if (kind == "gaussian_type") return gaussian_type_weight(model, spec.at("lambda").get<double>(), exponents({}));
  if (kind == "lq_norm")
    return lq_norm_weight(model, spec.at("q").get<double>(), spec.value("scale", 1.0), exponents({}));
  if (kind == "sup_norm_kl") return sup_norm_kl_weight(model, spec.value("grid", 512), exponents({}));
  if (kind == "square_norm") return square_norm_weight(model, exponents({2.0, 3.0}));
  throw std::invalid_argument("unknown weight kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

Weight unit_weight(const GaussianModel& model) {
  (void)model;
  return Weight("unit", constant_field(1.0), constant_field(0.0), {}, nlohmann::json::object());
}

Weight gaussian_type_weight(const GaussianModel& model, double lambda, Exponents ex) {
  const Vector lam = Eigen::Map<const Vector>(model.spectrum().data(), model.dim());
  auto quad = [lam](const Point& p) { return (lam.array() * p.array().square()).sum(); };
  ScalarField log_w([lambda, quad](const Point& p) { return lambda * quad(p); },
                    [lambda, lam](const Point& p) -> Vector { return 2.0 * lambda * (lam.array() * p.array()).matrix(); },
                    [lambda, lam](const Point&) -> Matrix { return Matrix((2.0 * lambda * lam).asDiagonal()); });
  ScalarField w([lambda, quad](const Point& p) { return std::exp(lambda * quad(p)); });
  return Weight("gaussian_type", std::move(w), std::move(log_w), ex, {{"lambda", lambda}});
}

Weight lq_norm_weight(const GaussianModel& model, double q, double scale, Exponents ex) {
  ScalarField norm = lq_norm_field(model, q);
  ScalarField log_w = scaled(norm, scale);
  ScalarField w([norm, scale](const Point& p) { return std::exp(scale * norm(p)); });
  return Weight("lq_norm", std::move(w), std::move(log_w), ex, {{"q", q}, {"scale", scale}});
}

Weight sup_norm_kl_weight(const GaussianModel& model, int grid_size, Exponents ex) {
  const SupNormKL sup(model, grid_size);
  ScalarField log_w = sup.field();
  ScalarField w([log_w](const Point& p) { return std::exp(log_w(p)); });
  return Weight("sup_norm_kl", std::move(w), std::move(log_w), ex, {{"grid", grid_size}});
}

Weight square_norm_weight(const GaussianModel& model, Exponents ex) {
  const Vector lam = Eigen::Map<const Vector>(model.spectrum().data(), model.dim());
  auto quad = [lam](const Point& p) { return (lam.array() * p.array().square()).sum(); };
  auto singular = [](const Point& p) { return (p.array() == 0.0).all(); };
  ScalarField log_w(
      [quad](const Point& p) { return 2.0 * std::log(quad(p)); },
      [lam, quad](const Point& p) -> Vector { return 4.0 * (lam.array() * p.array()).matrix() / quad(p); },
      [lam, quad](const Point& p) -> Matrix {
        const double S = quad(p);
        const Vector u = (lam.array() * p.array()).matrix();
        return Matrix((4.0 / S) * lam.asDiagonal()) - (8.0 / (S * S)) * u * u.transpose();
      },
      singular, "singular at the origin");
  ScalarField w([quad](const Point& p) {
    const double S = quad(p);
    return S * S;
  });
  return Weight("square_norm", std::move(w), std::move(log_w), ex, nlohmann::json::object());
}

// ---------------------------------------------------------------------------

nlohmann::json MomentLadder::to_json() const {
  nlohmann::json rungs = nlohmann::json::array();
  for (const auto& e : ladder) rungs.push_back(e.to_json());
  return {{"name", name}, {"ladder", rungs}, {"max_share", max_share}, {"diverging", diverging}, {"reason", reason}};
}

std::vector<MomentLadder> moment_ladder(const GaussianModel& model, const std::vector<std::string>& names,
                                        const MultiIntegrand& fn, std::size_t budget, std::uint64_t seed,
                                        int rungs) {
  if (rungs < 2) throw std::invalid_argument("moment_ladder: need at least two rungs");
  std::vector<MomentLadder> out(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) out[k].name = names[k];
  for (int r = 0; r < rungs; ++r) {
    QuadratureOptions opts;
    opts.method = Method::MonteCarlo;
    opts.budget = budget << r;
    opts.seed = mix_seed(seed, 0x4c41u + static_cast<std::uint64_t>(r));
    const MultiEstimate m = integrate_mu_multi(model, names.size(), fn, opts);
    for (std::size_t k = 0; k < names.size(); ++k) {
      out[k].ladder.push_back(m.estimates[k]);
      if (r == rungs - 1) out[k].max_share = m.max_share[k];
    }
  }
  for (auto& m : out) {
    for (std::size_t r = 0; r < m.ladder.size(); ++r) {
      if (!std::isfinite(m.ladder[r].value) || !std::isfinite(m.ladder[r].std_error)) {
        m.diverging = true;
        m.reason = "non-finite estimate";
        break;
      }
      if (r > 0) {
        const auto& a = m.ladder[r - 1];
        const auto& b = m.ladder[r];
        const double sigma = std::hypot(a.std_error, b.std_error);
        if (std::abs(b.value - a.value) > kLadderSigma * sigma) {
          m.diverging = true;
          m.reason = "estimate unstable under budget doubling";
          break;
        }
      }
    }
    if (!m.diverging && m.max_share > kMaxTermShare) {
      m.diverging = true;
      m.reason = "single sample dominates the sum";
    }
  }
  return out;
}

nlohmann::json Hypothesis1Report::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : moments) ms.push_back(m.to_json());
  return {{"s", exponents.s},         {"t", exponents.t}, {"s_conj", exponents.s_conj()},
          {"p_min", exponents.p_min()}, {"moments", ms},     {"pass", pass},
          {"warnings", warnings}};
}

Hypothesis1Report check_hypothesis1(const Weight& weight, const GaussianModel& model, std::size_t budget,
                                    std::uint64_t seed) {
  const Exponents ex = weight.exponents();
  const bool hess = weight.has_hessian();
  std::vector<std::string> names{"w^s", "|grad w|^s", "|log w|^t", "|grad log w|^t"};
  if (hess) names.push_back("||hess log w||^t");
  const MultiIntegrand fn = [&](const Point& p, std::span<double> out) {
    if (weight.is_singular(p)) {
      std::fill(out.begin(), out.end(), std::numeric_limits<double>::quiet_NaN());
      return;
    }
    const double w = weight.w(p);
    const double lw = weight.log_w(p);
    const double g = weight.grad_log_w(p).norm();
    out[0] = std::pow(w, ex.s);
    out[1] = std::pow(w * g, ex.s);
    out[2] = std::pow(std::abs(lw), ex.t);
    out[3] = std::pow(g, ex.t);
    if (hess) out[4] = std::pow(weight.hess_log_w(p).norm(), ex.t);
  };
  Hypothesis1Report r;
  r.exponents = ex;
  r.moments = moment_ladder(model, names, fn, budget, seed);
  // The Hessian moment is screened without deciding the verdict: at finite
  // truncation it is finite but often has infinite variance, so the
  // single-sample flag cannot separate it from a divergent moment.
  r.pass = true;
  for (std::size_t i = 0; i < r.moments.size(); ++i) {
    const auto& m = r.moments[i];
    const bool fails = m.diverging || (!m.ladder.empty() && m.ladder.back().dropped > 0);
    if (!fails) continue;
    if (i < 4)
      r.pass = false;
    else
      r.warnings.push_back(m.name + " looks heavy-tailed: " + m.reason);
  }
  if (!ex.l2_theory()) r.warnings.push_back("t < 2 s': the L^2 divergence bound is not covered");
  return r;
}

double exp_quadratic_moment(const GaussianModel& model, double eta) {
  double prod = 1.0;
  for (double l : model.spectrum()) {
    const double d = 1.0 - 2.0 * eta * l;
    if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
    prod *= 1.0 / std::sqrt(d);
  }
  return prod;
}

double exp_quadratic_threshold(const GaussianModel& model) { return 1.0 / (2.0 * model.max_eigenvalue()); }

// ---------------------------------------------------------------------------

nlohmann::json FerniqueResult::to_json() const {
  return {{"tau", tau}, {"c", c}, {"quantile", quantile}, {"alpha", alpha}, {"clamped", clamped}};
}

FerniqueResult fernique_alpha(const ScalarField& g, double p_hom, const GaussianModel& model, std::size_t budget,
                              std::uint64_t seed, double alpha_max) {
  if (!(p_hom > 0.0 && p_hom <= 1.0)) throw std::invalid_argument("fernique_alpha: p must lie in (0, 1]");
  if (budget < kMinMcBudget) throw std::invalid_argument("fernique_alpha: budget must be at least 1000");
  std::vector<double> values(budget);
  const std::size_t blocks = (budget + kSampleBlock - 1) / kSampleBlock;
  parallel_for_blocks(blocks, [&](std::size_t b) {
    generate_block(model, seed, b, budget, [&](std::size_t i, const Point& p) { values[i] = g(p); });
  });
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(budget);
  FerniqueResult r;
  bool found = false;
  for (int step = 0; step <= 4 && !found; ++step) {
    const double level = 0.75 + 0.05 * step;
    const auto idx = std::min(budget - 1, static_cast<std::size_t>(std::ceil(level * n)) - 1);
    const double tau = values[idx];
    const auto le = std::upper_bound(values.begin(), values.end(), tau) - values.begin();
    const double c = static_cast<double>(le) / n;
    if (c > 0.55) {
      r.tau = tau;
      r.c = c;
      r.quantile = level;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("fernique_alpha: no admissible tau found");
  if (r.c >= 1.0 || r.tau == 0.0) {
    r.alpha = alpha_max;
    r.clamped = true;
    return r;
  }
  const double k = std::sqrt(std::pow(2.0, p_hom)) - 1.0;
  r.alpha = (-0.1 - std::log((1.0 - r.c) / r.c)) * k * k / (2.0 * r.tau * r.tau);
  if (r.alpha > alpha_max) {
    r.alpha = alpha_max;
    r.clamped = true;
  }
  return r;
}

double abs_normal_moment(double q) {
  return std::pow(2.0, 0.5 * q) * std::tgamma(0.5 * (q + 1.0)) / std::sqrt(std::numbers::pi);
}

nlohmann::json MomentFormulaResult::to_json() const {
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& e : partial_sums) ps.push_back(e.to_json());
  return {{"q", q}, {"partial_sums", ps}, {"closed_form", closed_form}, {"tail_bound", tail_bound}};
}

MomentFormulaResult moment_formula(const GaussianModel& model, double q, std::size_t budget, std::uint64_t seed) {
  if (!(q > 0.0)) throw std::invalid_argument("moment_formula: q must be positive");
  const int n = model.dim();
  std::vector<double> sl;
  for (double l : model.spectrum()) sl.push_back(std::sqrt(l));
  QuadratureOptions opts;
  opts.budget = budget;
  opts.seed = seed;
  const MultiEstimate m = integrate_mu_multi(
      model, static_cast<std::size_t>(n),
      [&](const Point& p, std::span<double> out) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += std::pow(std::abs(sl[static_cast<std::size_t>(i)] * p[i]), q);
          out[static_cast<std::size_t>(i)] = acc;
        }
      },
      opts);
  MomentFormulaResult r;
  r.q = q;
  r.partial_sums = m.estimates;
  const double cq = abs_normal_moment(q);
  double acc = 0.0;
  for (double l : model.spectrum()) {
    acc += cq * std::pow(l, 0.5 * q);
    r.closed_form.push_back(acc);
  }
  r.tail_bound = acc;
  if (n >= 2) {
    const auto& s = model.spectrum();
    const double ratio = std::pow(s[static_cast<std::size_t>(n - 1)] / s[static_cast<std::size_t>(n - 2)], 0.5 * q);
    if (ratio < 1.0) r.tail_bound += cq * std::pow(s.back(), 0.5 * q) * ratio / (1.0 - ratio);
  }
  return r;
}

}  // namespace wgsc
