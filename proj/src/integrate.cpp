#include "wgsc/integrate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/QR>

#include "wgsc/quadrature.hpp"
#include "wgsc/weights.hpp"

namespace wgsc {

std::string to_string(Method m) {
  switch (m) {
    case Method::MonteCarlo:
      return "mc";
    case Method::GaussHermite:
      return "gauss_hermite";
    case Method::Exact:
      return "exact";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "mc") return Method::MonteCarlo;
  if (s == "gh" || s == "gauss_hermite") return Method::GaussHermite;
  if (s == "exact") return Method::Exact;
  throw std::invalid_argument("unknown quadrature method '" + s + "'");
}

nlohmann::json IntegralEstimate::to_json() const {
  nlohmann::json j{{"value", value},
                   {"stderr", std_error},
                   {"method", to_string(method)},
                   {"n_eval", n_eval},
                   {"dropped", dropped}};
  if (!warnings.empty()) j["warnings"] = warnings;
  return j;
}

namespace {

// Running mean / sum of squared deviations, mergeable in a fixed order.
struct Accum {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double max_abs = 0.0;
  double sum_abs = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
    const double a = std::abs(x);
    max_abs = std::max(max_abs, a);
    sum_abs += a;
  }

  void merge(const Accum& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
    max_abs = std::max(max_abs, o.max_abs);
    sum_abs += o.sum_abs;
  }
};

bool any_nan(std::span<const double> v) {
  for (double x : v)
    if (std::isnan(x)) return true;
  return false;
}

MultiEstimate monte_carlo(const GaussianModel& model, std::size_t count, const MultiIntegrand& fn,
                          const QuadratureOptions& opts) {
  if (opts.budget < kMinMcBudget) throw std::invalid_argument("Monte Carlo budget must be at least 1000");
  const std::size_t blocks = (opts.budget + kSampleBlock - 1) / kSampleBlock;
  std::vector<std::vector<Accum>> partial(blocks, std::vector<Accum>(count));
  std::vector<std::size_t> dropped(blocks, 0);
  parallel_for_blocks(blocks, [&](std::size_t b) {
    std::vector<double> values(count);
    auto& acc = partial[b];
    generate_block(model, opts.seed, b, opts.budget, [&](std::size_t, const Point& p) {
      std::fill(values.begin(), values.end(), 0.0);
      fn(p, values);
      if (any_nan(values)) {
        ++dropped[b];
        return;
      }
      for (std::size_t k = 0; k < count; ++k) acc[k].add(values[k]);
    });
  });
  std::vector<Accum> total(count);
  std::size_t total_dropped = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t k = 0; k < count; ++k) total[k].merge(partial[b][k]);
    total_dropped += dropped[b];
  }
  MultiEstimate out;
  for (std::size_t k = 0; k < count; ++k) {
    const Accum& a = total[k];
    IntegralEstimate e;
    e.method = Method::MonteCarlo;
    e.n_eval = opts.budget;
    e.dropped = total_dropped;
    // Dropped points contribute zero, which keeps the estimator unbiased when
    // they form a null set.
    const double n = static_cast<double>(opts.budget);
    e.value = a.mean * a.n / n;
    const double var = a.n > 1.0 ? a.m2 / (a.n - 1.0) : 0.0;
    e.std_error = std::sqrt(var / n);
    if (!std::isfinite(e.value)) e.warnings.push_back("non-finite estimate");
    out.estimates.push_back(std::move(e));
    out.max_share.push_back(a.sum_abs > 0.0 ? a.max_abs / a.sum_abs : 0.0);
  }
  return out;
}

void check_gh(int dim, int nodes) {
  if (dim > kMaxGhDim) throw std::invalid_argument("Gauss-Hermite tensor rule limited to dim <= 8");
  if (nodes < 1 || nodes > kMaxGhNodes)
    throw std::invalid_argument("Gauss-Hermite rule limited to 1..20 nodes per axis");
}

MultiEstimate weighted_sum(const std::vector<Rule1D>& rules, std::size_t count,
                           const std::function<void(const Vector&, std::span<double>)>& at_node) {
  if (tensor_size(rules) > kMaxGhTensor) throw std::invalid_argument("Gauss-Hermite node budget overflow");
  std::vector<double> sums(count, 0.0);
  std::vector<double> values(count);
  std::size_t nodes = 0;
  std::size_t dropped = 0;
  for_each_tensor_node(rules, [&](const Vector& node, double w) {
    ++nodes;
    std::fill(values.begin(), values.end(), 0.0);
    at_node(node, values);
    if (any_nan(values)) {
      ++dropped;
      return;
    }
    for (std::size_t k = 0; k < count; ++k) sums[k] += w * values[k];
  });
  MultiEstimate out;
  for (std::size_t k = 0; k < count; ++k) {
    IntegralEstimate e;
    e.value = sums[k];
    e.method = Method::GaussHermite;
    e.n_eval = nodes;
    e.dropped = dropped;
    if (dropped > 0) e.warnings.push_back("singular quadrature nodes were skipped");
    out.estimates.push_back(std::move(e));
    out.max_share.push_back(0.0);
  }
  return out;
}

}  // namespace

MultiEstimate integrate_mu_multi(const GaussianModel& model, std::size_t count, const MultiIntegrand& fn,
                                 const QuadratureOptions& opts) {
  if (count == 0) throw std::invalid_argument("integrate: no integrands");
  switch (opts.method) {
    case Method::MonteCarlo:
      return monte_carlo(model, count, fn, opts);
    case Method::GaussHermite: {
      check_gh(model.dim(), opts.gh_nodes);
      const Rule1D rule = gauss_hermite(opts.gh_nodes);
      const std::vector<Rule1D> rules(static_cast<std::size_t>(model.dim()), rule);
      return weighted_sum(rules, count, fn);
    }
    case Method::Exact:
      break;
  }
  throw std::invalid_argument("integrate: volume integrals support mc and gauss_hermite only");
}

MultiEstimate integrate_nu_multi(const GaussianModel& model, const Weight& weight, std::size_t count,
                                 const MultiIntegrand& fn, const QuadratureOptions& opts) {
  // Slot `count` carries w itself for the tail diagnostic.
  MultiIntegrand weighted = [&](const Point& p, std::span<double> out) {
    const double w = weight.is_singular(p) ? std::numeric_limits<double>::quiet_NaN() : weight.w(p);
    fn(p, out.first(count));
    for (std::size_t k = 0; k < count; ++k) out[k] *= w;
    out[count] = w;
  };
  MultiEstimate all = integrate_mu_multi(model, count + 1, weighted, opts);
  MultiEstimate out;
  const double tail = all.max_share.back() * static_cast<double>(opts.budget);
  for (std::size_t k = 0; k < count; ++k) {
    IntegralEstimate e = all.estimates[k];
    if (opts.method == Method::MonteCarlo && tail > 1e3)
      e.warnings.push_back("heavy-tailed weight (max w / mean w > 1e3); consider a larger budget");
    out.estimates.push_back(std::move(e));
    out.max_share.push_back(all.max_share[k]);
  }
  return out;
}

IntegralEstimate integrate_mu(const GaussianModel& model, const ScalarField& integrand,
                              const QuadratureOptions& opts) {
  return integrate_mu_multi(
             model, 1, [&](const Point& p, std::span<double> out) { out[0] = integrand(p); }, opts)
      .estimates.front();
}

IntegralEstimate integrate_nu(const GaussianModel& model, const Weight& weight, const ScalarField& integrand,
                              const QuadratureOptions& opts) {
  return integrate_nu_multi(
             model, weight, 1, [&](const Point& p, std::span<double> out) { out[0] = integrand(p); }, opts)
      .estimates.front();
}

Matrix complement_basis(const Vector& a) {
  const int n = static_cast<int>(a.size());
  if (!(a.norm() > 0.0)) throw std::invalid_argument("complement_basis: zero vector");
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.rightCols(n - 1);
}

MultiEstimate integrate_halfspace_multi(const GaussianModel& model, const Vector& normal, double offset,
                                        std::size_t count, const MultiIntegrand& fn,
                                        const QuadratureOptions& opts) {
  const int n = model.dim();
  if (normal.size() != n) throw std::invalid_argument("half-space normal has the wrong dimension");
  const double len = normal.norm();
  if (!(len > 0.0)) throw std::invalid_argument("half-space normal must be nonzero");
  if (opts.method == Method::MonteCarlo) {
    MultiIntegrand restricted = [&](const Point& p, std::span<double> out) {
      if (normal.dot(p) < offset) fn(p, out);
    };
    return integrate_mu_multi(model, count, restricted, opts);
  }
  if (opts.method != Method::GaussHermite)
    throw std::invalid_argument("half-space integrals support mc and gauss_hermite only");
  check_gh(n - 1, opts.gh_nodes);
  const Vector u = normal / len;
  const double d = offset / len;
  const Matrix B = complement_basis(u);
  Rule1D radial = composite_legendre(opts.halfspace_panels, 8, std::min(-12.0, d - 1.0), d);
  for (std::size_t i = 0; i < radial.nodes.size(); ++i)
    radial.weights[i] *= std::exp(-0.5 * radial.nodes[i] * radial.nodes[i]) / std::sqrt(2.0 * std::numbers::pi);
  std::vector<Rule1D> rules{radial};
  const Rule1D gh = gauss_hermite(opts.gh_nodes);
  for (int k = 0; k < n - 1; ++k) rules.push_back(gh);
  Point y(n);
  return weighted_sum(rules, count, [&](const Vector& node, std::span<double> out) {
    y = node[0] * u + B * node.tail(n - 1);
    fn(y, out);
  });
}

}  // namespace wgsc
