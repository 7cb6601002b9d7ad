#include "wgsc/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace wgsc {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
// weights are mu0 times the squared first eigenvector components.
Rule1D golub_welsch(const Vector& diag, const Vector& offdiag, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  Vector sub = offdiag;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigensolver failed");
  Rule1D rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

Rule1D gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
  if (n == 1) return Rule1D{{0.0}, {1.0}};
  // Monic probabilists' Hermite recurrence: He_{k+1} = t He_k - k He_{k-1}.
  Vector diag = Vector::Zero(n);
  Vector off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  Rule1D rule = golub_welsch(diag, off, 1.0);
  // Symmetrize to remove eigensolver noise.
  for (int i = 0; i < n / 2; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(n - 1 - i);
    const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.nodes[a] = -x;
    rule.nodes[b] = x;
    rule.weights[a] = rule.weights[b] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  Rule1D rule;
  if (n == 1) {
    rule = Rule1D{{0.0}, {2.0}};
  } else {
    Vector diag = Vector::Zero(n);
    Vector off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    rule = golub_welsch(diag, off, 2.0);
  }
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

Rule1D composite_legendre(int panels, int order, double a, double b) {
  if (panels < 1) throw std::invalid_argument("composite_legendre: panels must be positive");
  const Rule1D base = gauss_legendre(order, 0.0, 1.0);
  Rule1D rule;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double left = a + p * h;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      rule.nodes.push_back(left + h * base.nodes[i]);
      rule.weights.push_back(h * base.weights[i]);
    }
  }
  return rule;
}

std::size_t tensor_size(const std::vector<Rule1D>& rules) {
  std::size_t total = 1;
  for (const auto& r : rules) {
    const std::size_t n = r.nodes.size();
    if (n != 0 && total > std::numeric_limits<std::size_t>::max() / n)
      return std::numeric_limits<std::size_t>::max();
    total *= n;
  }
  return total;
}

void for_each_tensor_node(const std::vector<Rule1D>& rules,
                          const std::function<void(const Vector&, double)>& fn) {
  const int d = static_cast<int>(rules.size());
  if (d == 0) {
    fn(Vector(0), 1.0);
    return;
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Vector node(d);
  while (true) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const auto& r = rules[static_cast<std::size_t>(k)];
      node[k] = r.nodes[idx[static_cast<std::size_t>(k)]];
      w *= r.weights[idx[static_cast<std::size_t>(k)]];
    }
    fn(node, w);
    int k = d - 1;
    while (k >= 0) {
      auto& i = idx[static_cast<std::size_t>(k)];
      if (++i < rules[static_cast<std::size_t>(k)].nodes.size()) break;
      i = 0;
      --k;
    }
    if (k < 0) break;
  }
}

SphereRule sphere_rule(int m, int order) {
  if (m < 2) throw std::invalid_argument("sphere_rule: dimension must be at least 2");
  if (order < 2) throw std::invalid_argument("sphere_rule: order must be at least 2");
  // Polar angles theta_1..theta_{m-2} on [0, pi] with Jacobian
  // sin^{m-2}(theta_1) ... sin(theta_{m-2}); azimuth phi on [0, 2 pi).
  std::vector<Rule1D> axes;
  for (int j = 0; j < m - 2; ++j) {
    Rule1D r = gauss_legendre(order, 0.0, std::numbers::pi);
    const int power = m - 2 - j;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) r.weights[i] *= std::pow(std::sin(r.nodes[i]), power);
    axes.push_back(std::move(r));
  }
  Rule1D azimuth;
  const int na = 2 * order;
  for (int i = 0; i < na; ++i) {
    azimuth.nodes.push_back(2.0 * std::numbers::pi * (i + 0.5) / na);
    azimuth.weights.push_back(2.0 * std::numbers::pi / na);
  }
  axes.push_back(std::move(azimuth));

  SphereRule out;
  for_each_tensor_node(axes, [&](const Vector& ang, double w) {
    Vector u(m);
    double s = 1.0;
    for (int j = 0; j < m - 2; ++j) {
      u[j] = s * std::cos(ang[j]);
      s *= std::sin(ang[j]);
    }
    u[m - 2] = s * std::cos(ang[m - 2]);
    u[m - 1] = s * std::sin(ang[m - 2]);
    out.nodes.push_back(std::move(u));
    out.weights.push_back(w);
  });
  return out;
}

}  // namespace wgsc
