#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "wgsc/surfaces.hpp"

using namespace wgsc;

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

Vector unit(int n, int k) {
  Vector e = Vector::Zero(n);
  e[k] = 1.0;
  return e;
}

ShellOptions shell(std::size_t budget, std::uint64_t seed) {
  ShellOptions o;
  o.budget = budget;
  o.seed = seed;
  return o;
}

}  // namespace

TEST(ExactSurface, HyperplaneMassIsNormalDensity) {
  const GaussianModel m({1.0, 0.5, 0.25, 0.125});
  const auto one = constant_field(1.0);
  for (double c : {0.0, 0.5, -1.3, 2.0}) {
    const auto s = LevelSetSurface::hyperplane(m, unit(4, 0), c);
    const auto e = surface_integral_exact(m, s, one);
    EXPECT_NEAR(e.value, std::exp(-0.5 * c * c) * kInvSqrt2Pi, 1e-12) << c;
    EXPECT_EQ(e.method, Method::Exact);
  }
  EXPECT_NEAR(surface_integral_exact(m, LevelSetSurface::hyperplane(m, unit(4, 0), 0.0), one).value, 0.398942, 1e-6);
}

TEST(ExactSurface, TiltedHyperplaneDependsOnDistanceOnly) {
  const auto m = GaussianModel::standard(3);
  const Vector a = (Vector(3) << 2.0, -1.0, 2.0).finished();  // |a| = 3
  const auto s = LevelSetSurface::hyperplane(m, a, 1.5);
  EXPECT_NEAR(surface_integral_exact(m, s, constant_field(1.0)).value, normal_pdf(0.5), 1e-12);
}

TEST(ExactSurface, TraceOfCoordinateOnHyperplane) {
  // On {y_1 = c} the first coordinate is constant, so the integral is c rho.
  const GaussianModel m({1.0, 0.5, 0.25});
  const double c = 0.7;
  const auto s = LevelSetSurface::hyperplane(m, unit(3, 0), c);
  EXPECT_NEAR(surface_integral_exact(m, s, coordinate_field(3, 0)).value, c * normal_pdf(c), 1e-12);
  // Second coordinate integrates to zero by symmetry.
  EXPECT_NEAR(surface_integral_exact(m, s, coordinate_field(3, 1)).value, 0.0, 1e-14);
}

TEST(ExactSurface, CircleInTwoDimensions) {
  const auto m = GaussianModel::standard(2);
  const auto s = LevelSetSurface::sphere(m, 1.0);
  EXPECT_NEAR(surface_integral_exact(m, s, constant_field(1.0)).value, std::exp(-0.5), 1e-12);
  const auto big = LevelSetSurface::sphere(m, 2.0);
  EXPECT_NEAR(surface_integral_exact(m, big, constant_field(1.0)).value, 2.0 * std::exp(-2.0), 1e-12);
}

TEST(ExactSurface, SphereInThreeDimensions) {
  // 4 pi r^2 (2 pi)^{-3/2} exp(-r^2 / 2).
  const auto m = GaussianModel::standard(3);
  const double r = 1.2;
  const auto s = LevelSetSurface::sphere(m, r);
  const double exact = 4.0 * std::numbers::pi * r * r * std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-0.5 * r * r);
  EXPECT_NEAR(surface_integral_exact(m, s, constant_field(1.0)).value, exact, 1e-12);
}

TEST(ExactSurface, CustomSurfaceHasNoParametrization) {
  const auto m = GaussianModel::standard(2);
  const auto s = LevelSetSurface::custom(sum(coordinate_field(2, 0), constant_field(-0.2)), 0.1);
  EXPECT_FALSE(s.has_exact());
  EXPECT_THROW(surface_integral_exact(m, s, constant_field(1.0)), std::invalid_argument);
}

TEST(ShellSurface, HyperplaneMatchesExact) {
  const GaussianModel m({1.0, 0.5, 0.25, 0.125});
  const Vector a = (Vector(4) << 1.0, 0.5, 0.0, -0.5).finished();
  const auto s = LevelSetSurface::hyperplane(m, a, 0.4);
  const auto f = gaussian_bump(Vector::Constant(4, 0.2), 1.2);
  const auto exact = surface_integral_exact(m, s, f);
  const auto est = surface_integral_shell(m, s, f, shell(400'000, 1));
  EXPECT_NEAR(est.value.value, exact.value, 3.0 * est.value.std_error);
  EXPECT_TRUE(est.epsilon_consistent);
  ASSERT_EQ(est.rungs.size(), 4u);
  EXPECT_DOUBLE_EQ(est.epsilon.back(), 0.1 * 0.125);
}

TEST(ShellSurface, SphereWithinTwoPercent) {
  const GaussianModel m({1.0, 0.5, 0.25});
  const auto s = LevelSetSurface::sphere(m, 1.0);
  const auto one = constant_field(1.0);
  const auto exact = surface_integral_exact(m, s, one);
  const auto est = surface_integral_shell(m, s, one, shell(1'000'000, 2));
  EXPECT_LE(std::abs(est.value.value - exact.value), 0.02 * exact.value);
}

TEST(ShellSurface, ZeroIntegrand) {
  const auto m = GaussianModel::standard(3);
  const auto est = surface_integral_shell(m, LevelSetSurface::sphere(m), constant_field(0.0), shell(100'000, 3));
  EXPECT_EQ(est.value.value, 0.0);
  EXPECT_EQ(est.value.std_error, 0.0);
}

TEST(ShellSurface, BandUndersampled) {
  const auto m = GaussianModel::standard(2);
  const auto far = LevelSetSurface::hyperplane(m, unit(2, 0), 6.0);
  try {
    surface_integral_shell(m, far, constant_field(1.0), shell(10'000, 4));
    FAIL() << "expected band undersampled";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("band undersampled"), std::string::npos);
  }
}

TEST(ShellSurface, DeterministicForSeed) {
  const auto m = GaussianModel::standard(3);
  const auto s = LevelSetSurface::sphere(m);
  const auto a = surface_integral_shell(m, s, constant_field(1.0), shell(200'000, 5));
  const auto b = surface_integral_shell(m, s, constant_field(1.0), shell(200'000, 5));
  EXPECT_EQ(a.value.value, b.value.value);
}

TEST(Region, EllipsoidInteriorMass) {
  // mu(sum y_i^2 < r^2) in dim 2 is 1 - exp(-r^2 / 2).
  const auto m = GaussianModel::standard(2);
  QuadratureOptions q;
  q.method = Method::GaussHermite;
  const auto r = integrate_region_multi(m, LevelSetSurface::sphere(m, 1.5), 1,
                                        [](const Point&, std::span<double> out) { out[0] = 1.0; }, q);
  EXPECT_NEAR(r.estimates[0].value, 1.0 - std::exp(-1.125), 1e-12);
}

TEST(Hypothesis2, HyperplaneMomentsAreExact) {
  const auto m = GaussianModel::standard(3);
  const Vector a = (Vector(3) << 0.0, 2.0, 0.0).finished();
  const auto s = LevelSetSurface::hyperplane(m, a, 0.5);
  const auto r = check_hypothesis2(m, s, {1.5, 2.0, 4.0}, 100'000, 1);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.exact.size(), 3u);
  for (std::size_t i = 0; i < r.exact.size(); ++i) {
    const auto& top = r.moments[i].ladder.back();
    EXPECT_NEAR(top.value, r.exact[i], 3.0 * top.std_error + 1e-12) << r.q_list[i];
  }
  EXPECT_NEAR(r.interior_mass.value, normal_cdf(0.25), 3.0 * r.interior_mass.std_error);
}

TEST(Hypothesis2, SphereMomentsAreFinite) {
  const GaussianModel m({1.0, 0.5, 0.25});
  const auto r = check_hypothesis2(m, LevelSetSurface::sphere(m), {1.5, 2.0, 4.0}, 100'000, 2);
  EXPECT_TRUE(r.pass) << r.to_json().dump();
  EXPECT_GT(r.interior_mass.value, 0.0);
}

TEST(Hypothesis2, PathSphereMomentsUpToEight) {
  // |grad G|^{-8} is bounded but concentrated on rare paths, hence the budget.
  const GaussianModel m(brownian_kl_spectrum(8));
  const auto r = check_hypothesis2(m, LevelSetSurface::l2_path_sphere(m), {2.0, 4.0, 8.0}, 1'000'000, 3);
  EXPECT_TRUE(r.pass) << r.to_json().dump();
}

TEST(RhoMonotonicity, EqualSubspacesGiveEquality) {
  const auto m = GaussianModel::standard(3);
  const auto r = rho_monotonicity_check(m, LevelSetSurface::sphere(m), constant_field(1.0), 2, 2, shell(200'000, 4));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.lhs.value, r.rhs.value);
}

TEST(RhoMonotonicity, NormalInsideSmallerSubspace) {
  const GaussianModel m({1.0, 0.5, 0.25});
  const auto s = LevelSetSurface::hyperplane(m, unit(3, 0), 0.3);
  const auto r = rho_monotonicity_check(m, s, constant_field(1.0), 1, 3, shell(200'000, 5));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.lhs.value, r.rhs.value, 1e-12);
}

TEST(RhoMonotonicity, SphereSlices) {
  const GaussianModel m({1.0, 0.5, 0.25, 0.125});
  const auto s = LevelSetSurface::sphere(m, 0.8);
  const ScalarField upper([](const Point& p) { return p[0] > 0.0 ? 1.0 : 0.0; });
  for (const auto& [m1, m2] : std::vector<std::pair<int, int>>{{1, 2}, {2, 4}, {1, 4}}) {
    const auto r = rho_monotonicity_check(m, s, upper, m1, m2, shell(200'000, 6));
    EXPECT_TRUE(r.pass) << m1 << " " << m2 << " " << r.to_json().dump();
    EXPECT_LE(r.lhs.value, r.rhs.value + 3.0 * r.rhs.std_error);
  }
}

TEST(Serialization, SurfaceJson) {
  const auto m = GaussianModel::standard(2);
  const auto j = LevelSetSurface::hyperplane(m, unit(2, 1), 0.25).to_json();
  EXPECT_EQ(j.at("kind"), "hyperplane");
  EXPECT_EQ(j.at("offset"), 0.25);
  EXPECT_EQ(LevelSetSurface::sphere(m, 2.0).to_json().at("radius"), 2.0);
}
