#pragma once

#include "weakid/noise.hpp"
#include "weakid/weakform.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace weakid {

// Lognormal data covariance: sigma^2 diag(y) ("linear") or sigma^2 diag(y^2) ("quadratic").
enum class LognormalCovariance { Linear, Quadratic };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::AdditiveGaussian;
    double sigma = 0.0;
    bool known = true;
    LognormalCovariance lognormal_covariance = LognormalCovariance::Linear;
};

// Sandwich: (G'G)^-1 G' S_R G (G'G)^-1.  Gls: (G' S_R^-1 G)^-1.
enum class CovarianceForm { Sandwich, Gls };

struct IrlsOptions {
    int max_iter = 10;
    double tol = 1e-6;
    double level = 0.95;
    CovarianceForm covariance = CovarianceForm::Sandwich;
};

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return lo <= x && x <= hi; }
};

struct Estimate {
    Eigen::VectorXd w_hat;
    Eigen::MatrixXd S_w;
    std::vector<ConfidenceInterval> ci;
    int iterations = 0;
    bool converged = false;
    double sigma_used = 0.0;
};

Eigen::VectorXd ols_solve(const WeakLinearSystem& sys, double rank_tol = 1e-12);

Eigen::MatrixXd residual_covariance(const Eigen::MatrixXd& J, const NoiseSpec& noise,
                                    const Eigen::VectorXd& obs);

Estimate irls_estimate(const WeakObservationModel& model, const Eigen::VectorXd& obs,
                       const TestFunctionBasis& basis, const NoiseSpec& noise,
                       const IrlsOptions& options = {});

double normal_quantile(double p);

std::vector<ConfidenceInterval> confidence_intervals(const Estimate& est, double level = 0.95);

double estimate_sigma(const Eigen::VectorXd& obs, const TimeGrid& grid);

}  // namespace weakid
