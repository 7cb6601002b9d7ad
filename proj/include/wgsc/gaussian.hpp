#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace wgsc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the truncation space, stored in whitened (standard-Gaussian)
/// coordinates y. The ambient point is x = Q^{1/2} y.
using Point = Eigen::VectorXd;

/// Centered nondegenerate Gaussian measure on R^n with diagonal covariance
/// Q = diag(lambda_1, ..., lambda_n) in the eigenbasis v_k.
///
/// The Cameron-Martin basis is e_k = sqrt(lambda_k) v_k. In whitened
/// coordinates the H-inner product is the Euclidean one and
/// hat{e}_k(x) = (x, v_k) / sqrt(lambda_k) is the k-th coordinate y_k.
/// Instances are immutable and safe to share between threads.
class GaussianModel {
 public:
  explicit GaussianModel(std::vector<double> spectrum, std::string label = {});

  static GaussianModel standard(int dim);
  /// {"dim": n, "spectrum": [...] | {"family": ..., "n": n}, "label": "..."}
  static GaussianModel from_json(const nlohmann::json& spec);

  int dim() const { return static_cast<int>(spectrum_.size()); }
  const std::vector<double>& spectrum() const { return spectrum_; }
  double eigenvalue(int k) const;
  const std::string& label() const { return label_; }

  double max_eigenvalue() const;
  double min_eigenvalue() const;

  Point whiten(const Vector& ambient) const;
  Vector unwhiten(const Point& p) const;

  /// hat{e}_k at p, computed directly as the k-th whitened coordinate
  /// (0-based k).
  double e_hat(int k, const Point& p) const;
  /// hat{e}_k evaluated from an ambient vector as (x, v_k) / sqrt(lambda_k).
  double e_hat_ambient(int k, const Vector& x) const;

  /// (x, x)_X = sum_i lambda_i y_i^2.
  double ambient_norm_sq(const Point& p) const;
  /// (x, e_k)_X = lambda_k y_k.
  double ambient_dot_basis(int k, const Point& p) const;

  /// Log density of the standard normal law of the whitened coordinates.
  double log_density(const Point& p) const;

  nlohmann::json to_json() const;

 private:
  void check_dim(const Vector& v) const;

  std::vector<double> spectrum_;
  std::vector<double> sqrt_spectrum_;
  std::string label_;
};

/// lambda_i = base^{-i}, i = 1..n (base 4 and base 2 are the built-in
/// families).
std::vector<double> geometric_spectrum(double base, int n);
/// Karhunen-Loeve eigenvalues of Brownian motion on [0, 1]:
/// lambda_i = 4 / (pi^2 (2i - 1)^2).
std::vector<double> brownian_kl_spectrum(int n);

// ---------------------------------------------------------------------------
// Reproducible sampling.
//
// The sample index space is cut into fixed-size blocks. Block b draws from
// a generator seeded by mixing (seed, b), so the points produced are a pure
// function of (seed, index) and do not depend on how blocks are assigned to
// workers.

inline constexpr std::size_t kSampleBlock = 4096;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Number of worker threads used by parallel loops; 0 selects
/// hardware_concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Runs fn(block) for block = 0..blocks-1 on the worker pool. Each block is
/// processed by exactly one worker.
void parallel_for_blocks(std::size_t blocks, const std::function<void(std::size_t)>& fn);

/// Calls fn(index, point) for every sample of one block. Block b holds the
/// global indices [b * kSampleBlock, min((b + 1) * kSampleBlock, count)).
void generate_block(const GaussianModel& model, std::uint64_t seed, std::size_t block,
                    std::size_t count, const std::function<void(std::size_t, const Point&)>& fn);

/// count i.i.d. standard-Gaussian points in whitened coordinates.
std::vector<Point> sample(const GaussianModel& model, std::size_t count, std::uint64_t seed);

}  // namespace wgsc
