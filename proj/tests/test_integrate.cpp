#include <cmath>

#include <gtest/gtest.h>

#include "wgsc/integrate.hpp"
#include "wgsc/surfaces.hpp"
#include "wgsc/weights.hpp"

using namespace wgsc;

namespace {

QuadratureOptions gh(int nodes = 20) {
  QuadratureOptions o;
  o.method = Method::GaussHermite;
  o.gh_nodes = nodes;
  return o;
}

QuadratureOptions mc(std::size_t budget, std::uint64_t seed = 1) {
  QuadratureOptions o;
  o.budget = budget;
  o.seed = seed;
  return o;
}

}  // namespace

TEST(IntegrateMu, ConstantOne) {
  const GaussianModel m({1.0, 0.5, 0.25});
  const auto one = constant_field(1.0);
  const auto g = integrate_mu(m, one, gh(5));
  EXPECT_NEAR(g.value, 1.0, 1e-14);
  EXPECT_EQ(g.std_error, 0.0);
  EXPECT_EQ(g.method, Method::GaussHermite);
  EXPECT_EQ(g.n_eval, 125u);
  const auto e = integrate_mu(m, one, mc(10'000));
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.dropped, 0u);
}

TEST(IntegrateMu, SecondMomentWithTwoNodes) {
  const auto m = GaussianModel::standard(2);
  EXPECT_NEAR(integrate_mu(m, polynomial(2, {{1.0, {2, 0}}}), gh(2)).value, 1.0, 1e-14);
}

TEST(IntegrateMu, ExponentialQuadraticClosedForm) {
  const GaussianModel m({1.0, 0.5});
  const ScalarField f([&m](const Point& p) { return std::exp(0.1 * m.ambient_norm_sq(p)); });
  const double exact = 1.0 / std::sqrt((1.0 - 0.2) * (1.0 - 0.1));
  EXPECT_NEAR(integrate_mu(m, f, gh()).value, exact, 1e-12);
  const auto e = integrate_mu(m, f, mc(200'000, 3));
  EXPECT_NEAR(e.value, exact, 3.0 * e.std_error);
  EXPECT_NEAR(exp_quadratic_moment(m, 0.1), exact, 1e-14);
}

TEST(IntegrateMu, GuardsAndErrors) {
  const auto m = GaussianModel::standard(9);
  EXPECT_THROW(integrate_mu(m, constant_field(1.0), gh(2)), std::invalid_argument);
  EXPECT_THROW(integrate_mu(GaussianModel::standard(2), constant_field(1.0), gh(21)), std::invalid_argument);
  EXPECT_THROW(integrate_mu(GaussianModel::standard(2), constant_field(1.0), mc(999)), std::invalid_argument);
  EXPECT_THROW(method_from_string("qmc"), std::invalid_argument);
  EXPECT_EQ(method_from_string("gh"), Method::GaussHermite);
}

TEST(IntegrateMu, SingularPointsAreDroppedAndCounted) {
  const auto m = GaussianModel::standard(1);
  const ScalarField f([](const Point& p) { return p[0] > 0.0 ? std::numeric_limits<double>::quiet_NaN() : 1.0; });
  const auto e = integrate_mu(m, f, mc(10'000));
  EXPECT_GT(e.dropped, 4000u);
  EXPECT_LT(e.dropped, 6000u);
}

TEST(IntegrateMu, GaussHermiteAndMonteCarloAgree) {
  const GaussianModel m({1.0, 0.5, 0.25});
  const std::vector<ScalarField> battery{
      gaussian_bump(Vector::Constant(3, 0.3), 1.0),
      polynomial(3, {{1.0, {2, 1, 0}}, {0.5, {0, 0, 2}}, {-1.0, {1, 0, 0}}}),
      compose({[](double t) { return std::atan(t); }, [](double t) { return 1.0 / (1 + t * t); }, {}},
              coordinate_field(3, 1)),
      ScalarField([](const Point& p) { return std::cos(p[0] + 0.5 * p[2]); }),
  };
  for (std::size_t i = 0; i < battery.size(); ++i) {
    const auto a = integrate_mu(m, battery[i], gh());
    const auto b = integrate_mu(m, battery[i], mc(200'000, 10 + i));
    EXPECT_LE(std::abs(a.value - b.value), 4.0 * b.std_error) << i;
  }
}

TEST(IntegrateMu, WorkerCountDoesNotChangeBits) {
  const GaussianModel m({1.0, 0.5, 0.25});
  const auto f = gaussian_bump(Vector::Constant(3, 0.1), 0.7);
  set_worker_count(1);
  const auto a = integrate_mu(m, f, mc(50'001, 4));
  set_worker_count(3);
  const auto b = integrate_mu(m, f, mc(50'001, 4));
  set_worker_count(0);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(IntegrateNu, UnitWeightEqualsMu) {
  const GaussianModel m({1.0, 0.5});
  const auto f = gaussian_bump(Vector::Zero(2), 1.0);
  const auto a = integrate_mu(m, f, mc(20'000, 5));
  const auto b = integrate_nu(m, unit_weight(m), f, mc(20'000, 5));
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(integrate_mu(m, f, gh()).value, integrate_nu(m, unit_weight(m), f, gh()).value);
}

TEST(IntegrateNu, GaussianTypeTotalMass) {
  const GaussianModel m({1.0, 0.5, 0.25, 0.125});
  const double lambda = 0.05;
  const auto w = gaussian_type_weight(m, lambda);
  double exact = 1.0;
  for (double l : m.spectrum()) exact /= std::sqrt(1.0 - 2.0 * lambda * l);
  EXPECT_NEAR(integrate_nu(m, w, constant_field(1.0), gh()).value, exact, 1e-12);
  const auto e = integrate_nu(m, w, constant_field(1.0), mc(200'000, 6));
  EXPECT_NEAR(e.value, exact, 3.0 * e.std_error);
}

TEST(IntegrateNu, SquareNormChiSquareMoment) {
  const int n = 4;
  const auto m = GaussianModel::standard(n);
  const auto w = square_norm_weight(m);
  EXPECT_NEAR(integrate_nu(m, w, constant_field(1.0), gh(6)).value, n * n + 2.0 * n, 1e-10);
  const auto e = integrate_nu(m, w, constant_field(1.0), mc(400'000, 7));
  EXPECT_NEAR(e.value, n * n + 2.0 * n, 3.0 * e.std_error);
}

TEST(IntegrateNu, HeavyTailWarning) {
  const auto m = GaussianModel::standard(1);
  const auto w = gaussian_type_weight(m, 0.45);
  const auto e = integrate_nu(m, w, constant_field(1.0), mc(100'000, 8));
  EXPECT_FALSE(e.warnings.empty());
  const auto quiet = integrate_nu(m, gaussian_type_weight(m, 0.01), constant_field(1.0), mc(100'000, 8));
  EXPECT_TRUE(quiet.warnings.empty());
}

TEST(HalfSpace, MassAndFirstMoment) {
  const GaussianModel m({1.0, 0.5, 0.25});
  const Vector a = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const double c = 0.7;
  const double d = c / a.norm();
  const auto r = integrate_halfspace_multi(
      m, a, c, 2,
      [&](const Point& p, std::span<double> out) {
        out[0] = 1.0;
        out[1] = a.dot(p) / a.norm();
      },
      gh(10));
  EXPECT_NEAR(r.estimates[0].value, normal_cdf(d), 1e-12);
  EXPECT_NEAR(r.estimates[1].value, -normal_pdf(d), 1e-12);
  const auto s = integrate_halfspace_multi(
      m, a, c, 1, [&](const Point&, std::span<double> out) { out[0] = 1.0; }, mc(100'000, 9));
  EXPECT_NEAR(s.estimates[0].value, normal_cdf(d), 3.0 * s.estimates[0].std_error);
}

TEST(Serialization, EstimateJsonShape) {
  IntegralEstimate e;
  e.value = 1.5;
  e.std_error = 0.25;
  e.n_eval = 10;
  const auto j = e.to_json();
  EXPECT_EQ(j.at("value"), 1.5);
  EXPECT_EQ(j.at("stderr"), 0.25);
  EXPECT_EQ(j.at("method"), "mc");
  EXPECT_EQ(j.at("n_eval"), 10);
  EXPECT_EQ(j.at("dropped"), 0);
}
