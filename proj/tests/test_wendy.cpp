#include "support.hpp"

#include "weakid/error.hpp"
#include "weakid/noise.hpp"
#include "weakid/wendy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace weakid;
using weakid::testing::example1;
using weakid::testing::example2;

namespace {

Estimate estimate_at(const Experiment& ex, double e, std::uint64_t seed, NoiseKind kind = NoiseKind::AdditiveGaussian,
                     IrlsOptions opt = {}) {
    const auto obs = corrupt(observed_truth(ex), ex.grid, e, kind, seed);
    return irls_estimate(*make_weak_model(ex), obs.values, make_basis(ex), NoiseSpec{kind, obs.sigma, true}, opt);
}

}  // namespace

TEST(NormalQuantile, KnownValues) {
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
    EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
}

TEST(Irls, ZeroNoiseEqualsOlsBitwise) {
    const Experiment ex = example1();
    const auto basis = make_basis(ex);
    const auto model = make_weak_model(ex);
    const Eigen::VectorXd y = observed_truth(ex);
    const Estimate est = irls_estimate(*model, y, basis, NoiseSpec{});
    EXPECT_EQ(est.w_hat, ols_solve(model->assemble(y, basis)));
    EXPECT_TRUE(est.converged);
    EXPECT_TRUE(est.S_w.isZero());
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(est.ci[i].lo, est.ci[i].hi);
}

TEST(Irls, NoiseFreeRecoveryBothPresets) {
    const Estimate a = irls_estimate(*make_weak_model(example1()), observed_truth(example1()), make_basis(example1()),
                                     NoiseSpec{});
    EXPECT_LE(((a.w_hat - Eigen::Vector3d(6, 6, 12)).array() / Eigen::Array3d(6, 6, 12)).abs().maxCoeff(), 0.01);
    const Estimate b = irls_estimate(*make_weak_model(example2()), observed_truth(example2()), make_basis(example2()),
                                     NoiseSpec{});
    EXPECT_LE(std::abs(b.w_hat[0] / 5.5e-4 - 1.0), 0.01);
}

TEST(Irls, ConvergesAtModerateNoise) {
    const Estimate est = estimate_at(example2(), 0.5, 17);
    EXPECT_TRUE(est.converged);
    EXPECT_GE(est.iterations, 2);
    EXPECT_LE(est.iterations, 11);
    EXPECT_LT(std::abs(est.w_hat[0] / 5.5e-4 - 1.0), 0.1);
    EXPECT_TRUE(est.ci[0].contains(est.w_hat[0]));
}

TEST(Irls, IterationCapRespected) {
    IrlsOptions opt;
    opt.max_iter = 1;
    opt.tol = 0.0;
    const Estimate est = estimate_at(example1(), 0.05, 3, NoiseKind::AdditiveGaussian, opt);
    EXPECT_FALSE(est.converged);
    EXPECT_EQ(est.iterations, 2);
    opt.max_iter = 0;
    EXPECT_THROW(estimate_at(example1(), 0.05, 3, NoiseKind::AdditiveGaussian, opt), ConfigError);
}

TEST(Irls, SandwichTwoWays) {
    const Experiment ex = example1();
    const auto basis = make_basis(ex);
    const auto model = make_weak_model(ex);
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.03, NoiseKind::AdditiveGaussian, 21);
    const NoiseSpec noise{NoiseKind::AdditiveGaussian, obs.sigma, true};
    const Estimate est = irls_estimate(*model, obs.values, basis, noise);
    const auto sys = model->assemble(obs.values, basis);
    const Eigen::MatrixXd S_R = residual_covariance(model->data_jacobian(obs.values, basis, est.w_hat), noise, obs.values);
    const Eigen::MatrixXd GtG_inv = (sys.G.transpose() * sys.G).inverse();
    const Eigen::MatrixXd explicit_form = GtG_inv * sys.G.transpose() * S_R * sys.G * GtG_inv;
    EXPECT_LE(weakid::testing::max_rel(est.S_w, explicit_form), 1e-8);
}

TEST(Irls, GlsCovarianceOption) {
    IrlsOptions opt;
    opt.covariance = CovarianceForm::Gls;
    const Estimate g = estimate_at(example1(), 0.03, 21, NoiseKind::AdditiveGaussian, opt);
    const Estimate s = estimate_at(example1(), 0.03, 21);
    EXPECT_EQ(g.w_hat, s.w_hat);
    // The GLS covariance is the efficient one: never wider than the sandwich.
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LE(g.S_w(i, i), s.S_w(i, i) * (1 + 1e-8));
}

TEST(Irls, LognormalCovarianceForms) {
    const Experiment ex = example2();
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.1, NoiseKind::MultiplicativeLognormal, 8);
    const auto model = make_weak_model(ex);
    const auto basis = make_basis(ex);
    NoiseSpec lin{NoiseKind::MultiplicativeLognormal, obs.sigma, true, LognormalCovariance::Linear};
    NoiseSpec quad = lin;
    quad.lognormal_covariance = LognormalCovariance::Quadratic;
    const Estimate a = irls_estimate(*model, obs.values, basis, lin);
    const Estimate b = irls_estimate(*model, obs.values, basis, quad);
    EXPECT_LT(std::abs(a.w_hat[0] / 5.5e-4 - 1.0), 0.2);
    EXPECT_LT(std::abs(b.w_hat[0] / 5.5e-4 - 1.0), 0.2);
    EXPECT_GT(b.S_w(0, 0), a.S_w(0, 0));
}

TEST(Irls, UnknownSigmaEstimated) {
    const Experiment ex = example1();
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.05, NoiseKind::AdditiveGaussian, 4);
    const Estimate est = irls_estimate(*make_weak_model(ex), obs.values, make_basis(ex),
                                       NoiseSpec{NoiseKind::AdditiveGaussian, 0.0, false});
    EXPECT_NEAR(est.sigma_used / obs.sigma, 1.0, 0.15);
}

TEST(Irls, RankDeficientNamesColumns) {
    const Experiment ex = example1();
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ex.grid.size()));
    try {
        irls_estimate(*make_weak_model(ex), z, make_basis(ex), NoiseSpec{});
        FAIL();
    } catch (const RankDeficientError& e) {
        EXPECT_EQ(e.deficient_columns().size(), 2u);
        EXPECT_NE(std::string(e.what()).find("dependent columns"), std::string::npos);
    }
}

TEST(ConfidenceIntervals, NormalHalfWidth) {
    Estimate est;
    est.w_hat = Eigen::Vector2d(1.0, 2.0);
    est.S_w = Eigen::Vector2d(4.0, 0.0).asDiagonal();
    const auto ci = confidence_intervals(est, 0.95);
    EXPECT_NEAR(ci[0].hi - 1.0, 1.959963984540054 * 2.0, 1e-12);
    EXPECT_EQ(ci[1].lo, 2.0);
    est.S_w(1, 1) = -1.0;
    EXPECT_THROW(confidence_intervals(est), CovarianceError);
    EXPECT_THROW(confidence_intervals(est, 1.5), ConfigError);
}

TEST(EstimateSigma, SmoothPolynomialIsAnnihilated) {
    const TimeGrid g(0, 2, 100);
    const Eigen::ArrayXd t = g.points().array();
    const Eigen::VectorXd p = (1 + 2 * t - t.square() + 0.5 * t.cube() + 0.1 * t.pow(5)).matrix();
    EXPECT_LE(estimate_sigma(p, g), 1e-10 * p.cwiseAbs().maxCoeff());
}

TEST(EstimateSigma, CalibratedOnSmoothSignalAndPureNoise) {
    const TimeGrid g(0, 5, 400);
    const Eigen::VectorXd smooth = (g.points().array() * 1.3).sin().matrix();
    int inside = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        Eigen::VectorXd y = smooth;
        std::mt19937_64 rng(s);
        std::normal_distribution<double> n(0.0, 0.1);
        for (Eigen::Index i = 0; i < 400; ++i) y[i] += n(rng);
        const double sh = estimate_sigma(y, g);
        inside += (sh >= 0.08 && sh <= 0.12);
    }
    EXPECT_GE(inside, 198);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd w(4000);
    for (Eigen::Index i = 0; i < 4000; ++i) w[i] = n(rng);
    const double sh = estimate_sigma(w, TimeGrid(0, 1, 4000));
    EXPECT_GE(sh, 0.9);
    EXPECT_LE(sh, 1.1);
}
