#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "wgsc/weights.hpp"

using namespace wgsc;

namespace {

const GaussianModel kFour({1.0, 0.5, 0.25, 0.125});

std::vector<Point> points(const GaussianModel& m, std::size_t n, std::uint64_t seed) { return sample(m, n, seed); }

std::vector<Weight> builtins(const GaussianModel& m) {
  return {unit_weight(m), gaussian_type_weight(m, 0.05), gaussian_type_weight(m, -0.3), lq_norm_weight(m, 1.5),
          lq_norm_weight(m, 2.0, 0.5), square_norm_weight(m)};
}

}  // namespace

TEST(Exponents, ConjugateAndThreshold) {
  const Exponents e{2.0, 4.0};
  EXPECT_DOUBLE_EQ(e.s_conj(), 2.0);
  EXPECT_DOUBLE_EQ(e.p_min(), 2.0);
  EXPECT_TRUE(e.l2_theory());
  const Exponents f{3.0, 2.0};
  EXPECT_DOUBLE_EQ(f.s_conj(), 1.5);
  EXPECT_DOUBLE_EQ(f.p_min(), 4.0);
  EXPECT_FALSE(f.l2_theory());
  EXPECT_THROW((Exponents{1.0, 4.0}).validate(), std::invalid_argument);
  EXPECT_THROW((Exponents{2.0, 2.0}).validate(), std::invalid_argument);
  EXPECT_THROW(gaussian_type_weight(kFour, 0.1, {2.0, 1.5}), std::invalid_argument);
}

TEST(Weight, ExpOfLogMatchesDirectEvaluation) {
  for (const auto& w : builtins(kFour))
    for (const auto& p : points(kFour, 500, 1))
      EXPECT_NEAR(std::exp(w.log_w(p)), w.w(p), 1e-10 * w.w(p)) << w.kind();
  const GaussianModel kl(brownian_kl_spectrum(6));
  const auto s = sup_norm_kl_weight(kl, 512);
  for (const auto& p : points(kl, 200, 2)) EXPECT_NEAR(std::exp(s.log_w(p)), s.w(p), 1e-10 * s.w(p));
}

TEST(Weight, AnalyticGradientsMatchFiniteDifferences) {
  for (const auto& w : builtins(kFour)) {
    const auto pts = points(kFour, 1000, 3);
    EXPECT_LE(check_gradient_fd(w.log_w_field(), pts).max_rel_error, 1e-5) << w.kind();
    if (w.has_hessian()) EXPECT_LE(check_hessian_fd(w.log_w_field(), pts).max_rel_error, 1e-5) << w.kind();
  }
}

TEST(GaussianType, ZeroLambdaIsUnit) {
  const auto w = gaussian_type_weight(kFour, 0.0);
  for (const auto& p : points(kFour, 50, 4)) {
    EXPECT_EQ(w.w(p), 1.0);
    EXPECT_EQ(w.grad_log_w(p), Vector::Zero(4));
  }
}

TEST(GaussianType, ConstantHessianAndGradientFormula) {
  const double lambda = 0.07;
  const auto w = gaussian_type_weight(kFour, lambda);
  for (const auto& p : points(kFour, 20, 5)) {
    const Matrix H = w.hess_log_w(p);
    for (int i = 0; i < 4; ++i) {
      EXPECT_DOUBLE_EQ(w.grad_log_w(p)[i], 2.0 * lambda * kFour.ambient_dot_basis(i, p));
      for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(H(i, j), i == j ? 2.0 * lambda * kFour.eigenvalue(i) : 0.0);
    }
  }
}

TEST(GaussianType, IntegrabilityThresholdFromClosedForm) {
  EXPECT_DOUBLE_EQ(exp_quadratic_threshold(kFour), 0.5);
  EXPECT_TRUE(std::isfinite(exp_quadratic_moment(kFour, 0.49)));
  EXPECT_TRUE(std::isinf(exp_quadratic_moment(kFour, 0.5)));
  // One-dimensional reduction: int exp(eta x^2) dN(0, l) = (1 - 2 eta l)^{-1/2}.
  const GaussianModel one({0.8});
  EXPECT_NEAR(exp_quadratic_moment(one, 0.3), 1.0 / std::sqrt(1.0 - 0.48), 1e-15);
}

TEST(SquareNorm, HomogeneityOfLogWeight) {
  const auto w = square_norm_weight(kFour);
  for (const auto& p : points(kFour, 100, 6)) {
    EXPECT_NEAR(w.log_w(2.0 * p), w.log_w(p) + 4.0 * std::log(2.0), 1e-12);
    // Degree -1 homogeneity of the gradient.
    EXPECT_LE((w.grad_log_w(2.0 * p) - 0.5 * w.grad_log_w(p)).norm(), 1e-12 * w.grad_log_w(p).norm());
  }
  EXPECT_TRUE(w.is_singular(Point::Zero(4)));
}

TEST(SquareNorm, DisplayedDerivativeFormulas) {
  const auto w = square_norm_weight(kFour);
  for (const auto& p : points(kFour, 50, 7)) {
    const double xx = kFour.ambient_norm_sq(p);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(w.grad_log_w(p)[i], 4.0 * kFour.ambient_dot_basis(i, p) / xx, 1e-12);
      for (int j = 0; j < 4; ++j) {
        const double eij = i == j ? kFour.eigenvalue(i) : 0.0;
        const double expected =
            4.0 * (eij / xx - 2.0 * kFour.ambient_dot_basis(i, p) * kFour.ambient_dot_basis(j, p) / (xx * xx));
        EXPECT_NEAR(w.hess_log_w(p)(i, j), expected, 1e-11 * (1.0 + std::abs(expected)));
      }
    }
  }
}

TEST(WeightSpec, FromJson) {
  const auto w = Weight::from_json(nlohmann::json::parse(R"({"kind":"gaussian_type","lambda":0.05})"), kFour);
  EXPECT_EQ(w.kind(), "gaussian_type");
  EXPECT_EQ(w.to_json().at("lambda"), 0.05);
  EXPECT_EQ(w.to_json().at("p_min"), 2.0);
  EXPECT_EQ(Weight::from_json(nlohmann::json::parse(R"({"kind":"lq_norm","q":1.5})"), kFour).kind(), "lq_norm");
  EXPECT_EQ(Weight::from_json(nlohmann::json::parse(R"({"kind":"square_norm","t":3.5})"), kFour)
                .exponents()
                .t,
            3.5);
  EXPECT_THROW(Weight::from_json(nlohmann::json::parse(R"({"kind":"bessel"})"), kFour), std::invalid_argument);
  EXPECT_FALSE(w.exponent_warning(1.5).empty());
  EXPECT_TRUE(w.exponent_warning(2.5).empty());
}

TEST(Hypothesis1, UnitWeightIsExactlyOne) {
  const auto r = check_hypothesis1(unit_weight(kFour), kFour, 10'000, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.moments[0].name, "w^s");
  for (const auto& e : r.moments[0].ladder) {
    EXPECT_EQ(e.value, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
  }
}

TEST(Hypothesis1, GaussianTypeMomentMatchesClosedForm) {
  const double lambda = 0.05;
  const auto w = gaussian_type_weight(kFour, lambda);
  const auto r = check_hypothesis1(w, kFour, 100'000, 2);
  EXPECT_TRUE(r.pass);
  const double s = w.exponents().s;
  double exact = 1.0;
  for (double l : kFour.spectrum()) exact /= std::sqrt(1.0 - 2.0 * lambda * s * l);
  for (const auto& e : r.moments[0].ladder) EXPECT_NEAR(e.value, exact, 3.0 * e.std_error);
}

TEST(Hypothesis1, DivergenceFlagAboveThreshold) {
  // w^s = exp(s lambda (x, x)) is integrable iff s lambda lambda_max < 1/2.
  const double s = 2.0;
  const double below = 0.1 / (s * kFour.max_eigenvalue());
  const double above = 1.0 / (s * kFour.max_eigenvalue());
  const auto ok = check_hypothesis1(gaussian_type_weight(kFour, below), kFour, 100'000, 3);
  EXPECT_TRUE(ok.pass);
  const auto bad = check_hypothesis1(gaussian_type_weight(kFour, above), kFour, 100'000, 3);
  EXPECT_FALSE(bad.pass);
  EXPECT_TRUE(bad.moments[0].diverging);
}

TEST(Hypothesis1, SquareNormPassesForSeveralExponents) {
  // The truncation must be long enough that the origin singularity stays
  // square-integrable for the sampled moments; dim 16 covers t up to 4.
  const GaussianModel m(geometric_spectrum(4.0, 16));
  for (const Exponents ex : {Exponents{2.0, 2.5}, Exponents{2.0, 4.0}, Exponents{1.5, 4.0}}) {
    const auto r = check_hypothesis1(square_norm_weight(m, ex), m, 100'000, 4);
    EXPECT_TRUE(r.pass) << r.to_json().dump();
  }
}

TEST(Fernique, ClampWhenAlmostSurelyBelowTau) {
  const auto r = fernique_alpha(constant_field(0.0), 1.0, GaussianModel::standard(2), 10'000, 1, 3.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_EQ(r.alpha, 3.0);
}

TEST(Fernique, AbsoluteCoordinateInOneDimension) {
  const auto m = GaussianModel::standard(1);
  const ScalarField g([](const Point& p) { return std::abs(p[0]); });
  const auto r = fernique_alpha(g, 1.0, m, 200'000, 5);
  EXPECT_NEAR(r.c, 0.75, 0.01);
  EXPECT_GT(r.alpha, 0.0);
  EXPECT_LT(r.alpha, 0.5);  // exp(alpha y^2) is integrable iff alpha < 1/2
  const double k = std::sqrt(2.0) - 1.0;
  EXPECT_LE(std::log((1.0 - r.c) / r.c) + 2.0 * r.alpha * r.tau * r.tau / (k * k), -0.1 + 1e-12);
  const double alpha = r.alpha;
  const auto ladder = moment_ladder(
      m, {"exp(alpha g^2)"},
      [&](const Point& p, std::span<double> out) { out[0] = std::exp(alpha * p[0] * p[0]); }, 100'000, 6, 2);
  EXPECT_FALSE(ladder[0].diverging);
  EXPECT_NEAR(ladder[0].ladder[1].value, 1.0 / std::sqrt(1.0 - 2.0 * alpha), 3.0 * ladder[0].ladder[1].std_error);
}

TEST(Fernique, RejectsBadHomogeneity) {
  EXPECT_THROW(fernique_alpha(constant_field(1.0), 1.5, GaussianModel::standard(1), 1000, 1), std::invalid_argument);
}

TEST(MomentFormula, AbsoluteNormalMoments) {
  EXPECT_NEAR(abs_normal_moment(1.0), std::sqrt(2.0 / std::numbers::pi), 1e-15);
  EXPECT_NEAR(abs_normal_moment(2.0), 1.0, 1e-15);
  EXPECT_NEAR(abs_normal_moment(4.0), 3.0, 1e-14);
}

TEST(MomentFormula, PartialSumsIncreaseAndStayBelowBound) {
  const GaussianModel m(geometric_spectrum(2.0, 6));
  const auto r = moment_formula(m, 1.5, 400'000, 7);
  for (std::size_t i = 0; i < r.closed_form.size(); ++i) {
    EXPECT_NEAR(r.partial_sums[i].value, r.closed_form[i], 3.0 * r.partial_sums[i].std_error);
    if (i > 0) {
      EXPECT_GT(r.partial_sums[i].value, r.partial_sums[i - 1].value);
      EXPECT_GT(r.closed_form[i], r.closed_form[i - 1]);
    }
    EXPECT_LE(r.closed_form[i], r.tail_bound);
  }
  // Geometric spectrum: the continued sum is c_q sum_{i>=1} 2^{-iq/2}.
  const double ratio = std::pow(2.0, -0.75);
  EXPECT_NEAR(r.tail_bound, abs_normal_moment(1.5) * ratio / (1.0 - ratio), 1e-12);
}

TEST(MomentFormula, SecondMomentOfGeometricSpectrum) {
  const GaussianModel m(geometric_spectrum(2.0, 12));
  const auto r = moment_formula(m, 2.0, 200'000, 8);
  EXPECT_NEAR(r.closed_form.back(), 1.0 - std::pow(2.0, -12), 1e-14);
  EXPECT_NEAR(r.partial_sums.back().value, r.closed_form.back(), 3.0 * r.partial_sums.back().std_error);
}
