#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "wgsc/fields.hpp"

using namespace wgsc;

namespace {

std::vector<Point> random_points(int dim, std::size_t n, std::uint64_t seed) {
  return sample(GaussianModel::standard(dim), n, seed);
}

RealFunction arctan_fn() {
  return {[](double t) { return std::atan(t); }, [](double t) { return 1.0 / (1.0 + t * t); },
          [](double t) { return -2.0 * t / ((1.0 + t * t) * (1.0 + t * t)); }};
}

// Random quadratic outer function z^T A z + b^T z on R^m.
OuterFunction random_quadratic(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix A(m, m);
  Vector b(m);
  for (int i = 0; i < m; ++i) {
    b[i] = nd(rng);
    for (int j = 0; j < m; ++j) A(i, j) = nd(rng);
  }
  A = 0.5 * (A + A.transpose()).eval();
  return {[A, b](const Vector& z) { return z.dot(A * z) + b.dot(z); },
          [A, b](const Vector& z) -> Vector { return 2.0 * A * z + b; },
          [A](const Vector&) -> Matrix { return 2.0 * A; }};
}

}  // namespace

TEST(Gradient, ConstantFieldHasZeroGradient) {
  const auto f = constant_field(3.5);
  EXPECT_EQ(grad_H(f, Point::Ones(3)), Vector::Zero(3));
}

TEST(Gradient, CoordinateGivesUnitVector) {
  for (int k = 0; k < 4; ++k) EXPECT_EQ(grad_H(coordinate_field(4, k), Point::Random(4)), Vector::Unit(4, k));
  EXPECT_THROW(coordinate_field(4, 4), std::out_of_range);
}

TEST(Gradient, FallsBackToFiniteDifferences) {
  const ScalarField f([](const Point& p) { return std::sin(p[0]) * p[1]; });
  const Point p = (Point(2) << 0.3, -1.2).finished();
  const Vector g = grad_H(f, p);
  EXPECT_NEAR(g[0], std::cos(0.3) * -1.2, 1e-9);
  EXPECT_NEAR(g[1], std::sin(0.3), 1e-9);
}

TEST(Gradient, SingularPointsAreFlagged) {
  const ScalarField f([](const Point& p) { return p.norm(); }, {}, {}, [](const Point& p) { return p.norm() == 0.0; });
  EXPECT_TRUE(has_nan(grad_H(f, Point::Zero(2))));
  EXPECT_TRUE(has_nan(f.hessian(Point::Zero(2))));
  EXPECT_FALSE(has_nan(grad_H(f, Point::Ones(2))));
}

TEST(Cylindrical, IdentityOuterOnFirstCoordinate) {
  OuterFunction id{[](const Vector& z) { return z[0]; }, [](const Vector&) -> Vector { return Vector::Ones(1); },
                   [](const Vector&) -> Matrix { return Matrix::Zero(1, 1); }};
  const auto f = cylindrical(id, Matrix::Identity(1, 3));
  for (const auto& p : random_points(3, 10, 1)) EXPECT_EQ(f.gradient(p), Vector::Unit(3, 0));
  EXPECT_THROW(f(Point::Zero(2)), std::invalid_argument);
}

TEST(Cylindrical, GaussianOfTwoCoordinates) {
  OuterFunction g{[](const Vector& z) { return std::exp(-z.squaredNorm()); },
                  [](const Vector& z) -> Vector { return -2.0 * std::exp(-z.squaredNorm()) * z; }, {}};
  Matrix L = Matrix::Zero(2, 3);
  L(0, 0) = L(1, 1) = 1.0;
  const auto f = cylindrical(g, L);
  for (const auto& p : random_points(3, 20, 2)) {
    EXPECT_NEAR(f.gradient(p)[0], -2.0 * p[0] * f(p), 1e-15);
    EXPECT_EQ(f.gradient(p)[2], 0.0);
  }
}

TEST(Cylindrical, RandomQuadraticMatchesFiniteDifferences) {
  Matrix L(2, 4);
  L << 1.0, -0.5, 0.2, 0.0, 0.3, 0.3, -1.0, 2.0;
  const auto f = cylindrical(random_quadratic(2, 7), L);
  const auto pts = random_points(4, 200, 3);
  EXPECT_LE(check_gradient_fd(f, pts).max_rel_error, 1e-6);
  EXPECT_LE(check_hessian_fd(f, pts).max_rel_error, 1e-6);
}

TEST(Polynomial, DerivativesMatchFiniteDifferences) {
  const auto f = polynomial(3, {{1.5, {2, 1, 0}}, {-0.7, {0, 0, 3}}, {2.0, {1, 1, 1}}, {0.4, {0, 0, 0}}});
  const Point p = (Point(3) << 0.5, -1.0, 2.0).finished();
  EXPECT_NEAR(f(p), 1.5 * 0.25 * -1.0 - 0.7 * 8.0 + 2.0 * -1.0 + 0.4, 1e-14);
  const auto pts = random_points(3, 200, 4);
  EXPECT_LE(check_gradient_fd(f, pts).max_rel_error, 1e-7);
  EXPECT_LE(check_hessian_fd(f, pts).max_rel_error, 1e-7);
  EXPECT_THROW(polynomial(2, {{1.0, {1, 1, 1}}}), std::invalid_argument);
}

TEST(Hessian, AnalyticHessiansAreSymmetric) {
  const auto f = product(gaussian_bump(Vector::Constant(3, 0.2), 1.3), polynomial(3, {{1.0, {1, 2, 0}}}));
  for (const auto& p : random_points(3, 100, 5)) {
    const Matrix H = f.hessian(p);
    EXPECT_LE((H - H.transpose()).norm(), 1e-10);
  }
}

TEST(LqNorm, GradientMatchesFiniteDifferences) {
  const GaussianModel m(geometric_spectrum(2.0, 6));
  for (double q : {1.5, 2.0, 3.0}) {
    const auto f = lq_norm_field(m, q);
    EXPECT_LE(check_gradient_fd(f, random_points(6, 1000, 6)).max_rel_error, 1e-5) << q;
  }
  EXPECT_TRUE(lq_norm_field(m, 1.5).is_singular(Point::Zero(6)));
}

TEST(ChainRule, IdentityThetaHasNoDeviation) {
  const RealFunction id{[](double t) { return t; }, [](double) { return 1.0; }, {}};
  const auto r = chain_rule_check(id, coordinate_field(3, 1), random_points(3, 100, 7));
  EXPECT_EQ(r.checked, 100u);
  EXPECT_LE(r.max_rel_error, 1e-9);
}

TEST(ChainRule, ArctanOfCoordinate) {
  EXPECT_LE(chain_rule_check(arctan_fn(), coordinate_field(2, 0), random_points(2, 500, 8)).max_rel_error, 1e-8);
}

TEST(ChainRule, RandomSmoothComposition) {
  const RealFunction theta{[](double t) { return std::sin(2.0 * t) + 0.1 * t * t; },
                           [](double t) { return 2.0 * std::cos(2.0 * t) + 0.2 * t; }, {}};
  const auto phi = cylindrical(random_quadratic(2, 11), Matrix::Identity(2, 3) * 0.5);
  EXPECT_LE(chain_rule_check(theta, phi, random_points(3, 500, 9)).max_rel_error, 1e-5);
  const auto composed = compose(arctan_fn(), phi);
  EXPECT_LE(check_hessian_fd(composed, random_points(3, 100, 10)).max_rel_error, 1e-6);
}

TEST(ModulusRule, CoordinateAtPlusMinusOne) {
  const auto u = coordinate_field(2, 0);
  const auto a = modulus(u);
  EXPECT_EQ(a.gradient((Point(2) << 1.0, 0.3).finished()), Vector::Unit(2, 0));
  EXPECT_EQ(a.gradient((Point(2) << -1.0, 0.3).finished()), -Vector::Unit(2, 0));
  const std::vector<Point> pts{(Point(2) << 1.0, 0.3).finished(), (Point(2) << -1.0, 2.0).finished()};
  EXPECT_LE(modulus_rule_check(u, pts).max_rel_error, 1e-9);
}

TEST(ModulusRule, NegativeConstant) {
  const auto u = constant_field(-2.0);
  const Point p = Point::Ones(3);
  EXPECT_EQ(modulus(u).gradient(p), Vector::Zero(3));
  EXPECT_EQ(-u.gradient(p), Vector::Zero(3));
  EXPECT_LE(modulus_rule_check(u, {p}).max_rel_error, 1e-12);
}

TEST(ModulusRule, RandomSmoothFieldAndExclusionBand) {
  const auto u = cylindrical(random_quadratic(3, 12), Matrix::Identity(3, 3));
  const auto r = modulus_rule_check(u, random_points(3, 1000, 13));
  EXPECT_LE(r.max_rel_error, 1e-5);
  EXPECT_EQ(r.checked + r.skipped, 1000u);
  // Points on the zero set are excluded.
  const auto zero = modulus_rule_check(coordinate_field(2, 0), {Point::Zero(2)});
  EXPECT_EQ(zero.skipped, 1u);
}

TEST(ProductRule, CylindricalProductClosure) {
  const auto f = gaussian_bump(Vector::Constant(3, -0.4), 0.9);
  const auto g = cylindrical(random_quadratic(2, 14), Matrix::Identity(2, 3));
  const auto pts = random_points(3, 500, 15);
  EXPECT_LE(product_rule_check(f, g, pts).max_rel_error, 1e-6);
  const auto fg = product(f, g);
  for (const auto& p : pts)
    EXPECT_LE((fg.gradient(p) - (f(p) * g.gradient(p) + g(p) * f.gradient(p))).norm(), 1e-14);
}

TEST(SupNorm, ZeroPathIsSingular) {
  const GaussianModel m(brownian_kl_spectrum(4));
  const auto f = SupNormKL(m, 512).field();
  EXPECT_EQ(f(Point::Zero(4)), 0.0);
  EXPECT_TRUE(f.is_singular(Point::Zero(4)));
  EXPECT_TRUE(has_nan(f.gradient(Point::Zero(4))));
  EXPECT_THROW(SupNormKL(m, 32), std::invalid_argument);
}

TEST(SupNorm, SingleModePathAgainstDenseGrid) {
  const GaussianModel m(brownian_kl_spectrum(4));
  const SupNormKL sup(m, 512);
  const double c = -1.7;
  Point p = Point::Zero(4);
  p[0] = c;
  const double s1 = std::sqrt(m.eigenvalue(0));
  double dense = 0.0;
  double arg = 0.0;
  for (int j = 0; j <= 100000; ++j) {
    const double xi = j / 100000.0;
    const double v = std::abs(c * std::sqrt(2.0) * s1 * std::sin(xi / s1));
    if (v > dense) {
      dense = v;
      arg = xi;
    }
  }
  const auto e = sup.locate(p);
  EXPECT_NEAR(e.value, dense, 1e-10);
  EXPECT_NEAR(e.value, std::abs(c) * std::sqrt(2.0 * m.eigenvalue(0)), 1e-10);
  EXPECT_NEAR(e.argmax, std::min(1.0, std::numbers::pi * s1 / 2.0), 1e-6);
  EXPECT_NEAR(e.argmax, arg, 1e-5);
  EXPECT_EQ(e.sign, -1.0);
}

TEST(SupNorm, RandomPathsAgainstDenseGrid) {
  const GaussianModel m(brownian_kl_spectrum(6));
  const SupNormKL sup(m, 512);
  for (const auto& p : random_points(6, 20, 16)) {
    double dense = 0.0;
    for (int j = 0; j <= 20000; ++j) dense = std::max(dense, std::abs(sup.path(p, j / 20000.0)));
    const double v = sup.locate(p).value;
    EXPECT_GE(v, dense - 1e-12);
    EXPECT_LE(v - dense, 1e-6);
  }
}

TEST(SupNorm, ArgmaxGradientMatchesFiniteDifferences) {
  const GaussianModel m(brownian_kl_spectrum(6));
  const auto f = SupNormKL(m, 512).field();
  EXPECT_LE(check_gradient_fd(f, random_points(6, 1000, 17)).max_rel_error, 1e-3);
}
