#include "wgsc/gaussian.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace wgsc {

GaussianModel::GaussianModel(std::vector<double> spectrum, std::string label)
    : spectrum_(std::move(spectrum)), label_(std::move(label)) {
  if (spectrum_.empty()) throw std::invalid_argument("GaussianModel: empty spectrum");
  sqrt_spectrum_.reserve(spectrum_.size());
  for (double l : spectrum_) {
    if (!(l > 0.0) || !std::isfinite(l))
      throw std::invalid_argument("GaussianModel: covariance eigenvalues must be positive and finite");
    sqrt_spectrum_.push_back(std::sqrt(l));
  }
}

GaussianModel GaussianModel::standard(int dim) {
  if (dim < 1) throw std::invalid_argument("GaussianModel: dim must be positive");
  return GaussianModel(std::vector<double>(static_cast<std::size_t>(dim), 1.0), "standard");
}

GaussianModel GaussianModel::from_json(const nlohmann::json& spec) {
  std::vector<double> spectrum;
  std::string label = spec.value("label", std::string{});
  const auto& sp = spec.at("spectrum");
  if (sp.is_array()) {
    spectrum = sp.get<std::vector<double>>();
  } else if (sp.is_object()) {
    const std::string family = sp.at("family").get<std::string>();
    const int n = sp.contains("n") ? sp.at("n").get<int>() : spec.at("dim").get<int>();
    if (n < 1) throw std::invalid_argument("spectrum family: n must be positive");
    if (family == "4^-n") {
      spectrum = geometric_spectrum(4.0, n);
    } else if (family == "2^-n") {
      spectrum = geometric_spectrum(2.0, n);
    } else if (family == "brownian_kl") {
      spectrum = brownian_kl_spectrum(n);
    } else if (family == "identity") {
      spectrum.assign(static_cast<std::size_t>(n), 1.0);
    } else {
      throw std::invalid_argument("unknown spectrum family '" + family + "'");
    }
    if (label.empty()) label = family;
  } else {
    throw std::invalid_argument("model.spectrum must be an array or a family object");
  }
  if (spec.contains("dim") && spec.at("dim").get<int>() != static_cast<int>(spectrum.size()))
    throw std::invalid_argument("model.dim does not match spectrum length");
  return GaussianModel(std::move(spectrum), std::move(label));
}

nlohmann::json GaussianModel::to_json() const {
  return {{"dim", dim()}, {"spectrum", spectrum_}, {"label", label_}};
}

double GaussianModel::eigenvalue(int k) const {
  if (k < 0 || k >= dim()) throw std::out_of_range("GaussianModel: eigenvalue index out of range");
  return spectrum_[static_cast<std::size_t>(k)];
}

double GaussianModel::max_eigenvalue() const {
  return *std::max_element(spectrum_.begin(), spectrum_.end());
}

double GaussianModel::min_eigenvalue() const {
  return *std::min_element(spectrum_.begin(), spectrum_.end());
}

void GaussianModel::check_dim(const Vector& v) const {
  if (v.size() != dim()) throw std::invalid_argument("GaussianModel: dimension mismatch");
}

Point GaussianModel::whiten(const Vector& ambient) const {
  check_dim(ambient);
  Point y(dim());
  for (int i = 0; i < dim(); ++i) y[i] = ambient[i] / sqrt_spectrum_[static_cast<std::size_t>(i)];
  return y;
}

Vector GaussianModel::unwhiten(const Point& p) const {
  check_dim(p);
  Vector x(dim());
  for (int i = 0; i < dim(); ++i) x[i] = p[i] * sqrt_spectrum_[static_cast<std::size_t>(i)];
  return x;
}

double GaussianModel::e_hat(int k, const Point& p) const {
  if (k < 0 || k >= dim()) throw std::out_of_range("e_hat: index out of range");
  check_dim(p);
  return p[k];
}

double GaussianModel::e_hat_ambient(int k, const Vector& x) const {
  if (k < 0 || k >= dim()) throw std::out_of_range("e_hat: index out of range");
  check_dim(x);
  // (x, v_k) is the k-th ambient coordinate in the eigenbasis.
  return x[k] / sqrt_spectrum_[static_cast<std::size_t>(k)];
}

double GaussianModel::ambient_norm_sq(const Point& p) const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += spectrum_[static_cast<std::size_t>(i)] * p[i] * p[i];
  return s;
}

double GaussianModel::ambient_dot_basis(int k, const Point& p) const {
  return spectrum_[static_cast<std::size_t>(k)] * p[k];
}

double GaussianModel::log_density(const Point& p) const {
  check_dim(p);
  return -0.5 * p.squaredNorm() - 0.5 * dim() * std::log(2.0 * std::numbers::pi);
}

std::vector<double> geometric_spectrum(double base, int n) {
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(n));
  double v = 1.0;
  for (int i = 1; i <= n; ++i) {
    v /= base;
    s.push_back(v);
  }
  return s;
}

std::vector<double> brownian_kl_spectrum(int n) {
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double d = std::numbers::pi * (2.0 * i - 1.0);
    s.push_back(4.0 / (d * d));
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::atomic<unsigned> g_workers{0};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

void set_worker_count(unsigned workers) { g_workers.store(workers); }

unsigned worker_count() {
  unsigned w = g_workers.load();
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return w;
}

void parallel_for_blocks(std::size_t blocks, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
        try {
          fn(b);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

void generate_block(const GaussianModel& model, std::uint64_t seed, std::size_t block,
                    std::size_t count, const std::function<void(std::size_t, const Point&)>& fn) {
  const std::size_t first = block * kSampleBlock;
  const std::size_t last = std::min(count, first + kSampleBlock);
  std::mt19937_64 engine(mix_seed(seed, block));
  std::normal_distribution<double> normal(0.0, 1.0);
  Point p(model.dim());
  for (std::size_t i = first; i < last; ++i) {
    for (int d = 0; d < model.dim(); ++d) p[d] = normal(engine);
    fn(i, p);
  }
}

std::vector<Point> sample(const GaussianModel& model, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sample: count must be positive");
  std::vector<Point> out(count);
  const std::size_t blocks = (count + kSampleBlock - 1) / kSampleBlock;
  parallel_for_blocks(blocks, [&](std::size_t b) {
    generate_block(model, seed, b, count, [&](std::size_t i, const Point& p) { out[i] = p; });
  });
  return out;
}

}  // namespace wgsc
