#include "support.hpp"

#include "weakid/baseline.hpp"
#include "weakid/error.hpp"
#include "weakid/identifiability.hpp"
#include "weakid/noise.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace weakid;

namespace {

Experiment blood40() {
    Experiment ex = weakid::testing::example1();
    ex.grid = TimeGrid(0.0, 5.0, 40);
    return ex;
}

}  // namespace

TEST(Chi2, Quantiles) {
    EXPECT_NEAR(chi2_quantile(0.95, 1.0), 3.841458820694124, 1e-10);
    EXPECT_NEAR(chi2_quantile(0.95, 2.0), -2.0 * std::log(0.05), 1e-10);
}

TEST(OutputError, ObjectiveIsSsrAndZeroAtTruth) {
    const Experiment ex = blood40();
    const OeProblem p = oe_problem(ex, OeSpace::Mechanistic);
    const Eigen::VectorXd y = observed_truth(ex);
    EXPECT_LT(oe_objective(p, y, ex.grid, ex.params), 1e-16);
    Eigen::VectorXd shifted = y;
    shifted.array() += 0.1;
    EXPECT_NEAR(oe_objective(p, shifted, ex.grid, ex.params), 40 * 0.01, 1e-8);
}

TEST(OutputError, NoiseFreeFromTruthReturnsTruth) {
    for (const auto space : {OeSpace::Mechanistic, OeSpace::Unknowns}) {
        const Experiment ex = blood40();
        const OeProblem p = oe_problem(ex, space);
        const auto obs = corrupt(observed_truth(ex), ex.grid, 0.0, NoiseKind::AdditiveGaussian, 1);
        const Eigen::VectorXd truth = oe_truth(ex, space);
        const OeFitResult fit = oe_fit(p, obs, truth);
        EXPECT_LE(((fit.params - truth).array() / truth.array()).abs().maxCoeff(), 1e-8);
        EXPECT_GE(fit.objective, 0.0);
        EXPECT_GT(fit.walltime, 0.0);
    }
}

TEST(OutputError, RecoversFromPerturbedStart) {
    const Experiment ex = weakid::testing::example2();
    const OeProblem p = oe_problem(ex, OeSpace::Mechanistic);
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.05, NoiseKind::AdditiveGaussian, 2);
    const OeFitResult fit = oe_fit(p, obs, Eigen::VectorXd::Constant(1, 6e-4));
    EXPECT_TRUE(fit.converged);
    EXPECT_LT(std::abs(fit.params[0] / 5.5e-4 - 1.0), 0.01);
}

TEST(OutputError, BoundsRespected) {
    const Experiment ex = blood40();
    const OeProblem p = oe_problem(ex, OeSpace::Mechanistic);
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.2, NoiseKind::AdditiveGaussian, 9);
    const OeFitResult fit = oe_fit(p, obs, Eigen::Vector3d(0.01, 3.0, 0.01));
    EXPECT_GE(fit.params.minCoeff(), 0.0);
}

TEST(OutputError, FixedIndexHeld) {
    const Experiment ex = blood40();
    const OeProblem p = oe_problem(ex, OeSpace::Unknowns);
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.05, NoiseKind::AdditiveGaussian, 4);
    const OeFitResult fit = oe_fit_fixed(p, obs, Eigen::Vector3d(6, 6.5, 12), 1);
    EXPECT_EQ(fit.params[1], 6.5);
}

TEST(OutputError, EvaluationBudget) {
    const Experiment ex = blood40();
    const OeProblem p = oe_problem(ex, OeSpace::Mechanistic);
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.05, NoiseKind::AdditiveGaussian, 4);
    OeOptions opt;
    opt.max_evaluations = 5;
    const OeFitResult fit = oe_fit(p, obs, Eigen::Vector3d(2, 2, 2), opt);
    EXPECT_FALSE(fit.converged);
    EXPECT_LE(fit.evaluations, 5 + 4);
}

TEST(OutputError, UnknownsMapping) {
    const Experiment ex = blood40();
    EXPECT_EQ(oe_truth(ex, OeSpace::Unknowns), Eigen::VectorXd(Eigen::Vector3d(6, 6, 12)));
    EXPECT_EQ(oe_to_unknowns(ex, OeSpace::Mechanistic, ex.params), Eigen::VectorXd(Eigen::Vector3d(6, 6, 12)));
}

TEST(Profile, BoundedAndAboveMinimum) {
    Experiment ex = weakid::testing::example2();
    const OeProblem p = oe_problem(ex, OeSpace::Mechanistic);
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.2, NoiseKind::AdditiveGaussian, 12);
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(21, 5.0e-4, 6.0e-4);
    const ProfileCurve pc = profile_likelihood(p, obs, 0, grid, Eigen::VectorXd::Constant(1, 5.5e-4));
    for (Eigen::Index i = 0; i < pc.values.size(); ++i) EXPECT_GE(pc.values[i], pc.min_objective);
    EXPECT_TRUE(pc.bounded());
    EXPECT_LT(*pc.ci_lo, pc.theta_hat[0]);
    EXPECT_GT(*pc.ci_hi, pc.theta_hat[0]);
    EXPECT_GT(pc.threshold, pc.min_objective);
}

TEST(Profile, GridMustBracketOptimum) {
    Experiment ex = weakid::testing::example2();
    const OeProblem p = oe_problem(ex, OeSpace::Mechanistic);
    const auto obs = corrupt(observed_truth(ex), ex.grid, 0.2, NoiseKind::AdditiveGaussian, 12);
    EXPECT_THROW(profile_likelihood(p, obs, 0, Eigen::VectorXd::LinSpaced(5, 7e-4, 8e-4),
                                    Eigen::VectorXd::Constant(1, 5.5e-4)),
                 ConfigError);
    EXPECT_THROW(profile_likelihood(p, obs, 0, Eigen::VectorXd::Constant(1, 5e-4),
                                    Eigen::VectorXd::Constant(1, 5.5e-4)),
                 ConfigError);
}

TEST(Timing, SmokeRunHasBothEstimators) {
    SweepConfig c = weakid::testing::sweep2();
    c.e_grid = {0.05};
    c.threads = 1;
    const TimingTable t = timing_compare(c, 1);
    ASSERT_EQ(t.summary.size(), 2u);
    EXPECT_EQ(t.summary[0].estimator, "wendy");
    EXPECT_EQ(t.summary[1].estimator, "oe");
    for (const auto& s : t.summary) {
        EXPECT_GT(s.median_walltime, 0.0);
        EXPECT_TRUE(std::isfinite(s.median_walltime));
    }
    EXPECT_EQ(t.scatter.size(), 2u);
}
