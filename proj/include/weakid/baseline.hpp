#pragma once

#include "weakid/experiment.hpp"
#include "weakid/noise.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace weakid {

// Which vector the output-error fit works in: the mechanistic rates, or the
// weak-form unknowns (w for blood, beta for SIR).
enum class OeSpace { Mechanistic, Unknowns };

struct Bounds {
    Eigen::VectorXd lo, hi;
};

struct OeProblem {
    OdeModel model;
    Eigen::VectorXd y0;
    Eigen::Index observed = 0;
    std::vector<std::string> names;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)> to_params;
    std::optional<Bounds> bounds;
};

OeProblem oe_problem(const Experiment& ex, OeSpace space);
// The true value of theta for the experiment.
Eigen::VectorXd oe_truth(const Experiment& ex, OeSpace space);
// theta -> weak-form unknowns
Eigen::VectorXd oe_to_unknowns(const Experiment& ex, OeSpace space, const Eigen::VectorXd& theta);

struct OeOptions {
    int max_iter = 200;
    double fd_step = 1e-6;
    double rtol = 1e-10;
    double atol = 1e-10;
    double init_spread = 0.5;  // log-scale sd of the truth perturbation used in sweeps
    int max_evaluations = 0;   // 0 = unlimited
    double xtol = 1e-10;
    double ftol = 1e-14;
    OeSpace space = OeSpace::Mechanistic;
};

struct OeFitResult {
    Eigen::VectorXd params;  // theta in the problem's space
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double walltime = 0.0;
};

double oe_objective(const OeProblem& problem, const Eigen::VectorXd& obs, const TimeGrid& grid,
                    const Eigen::VectorXd& theta, const OeOptions& options = {});

OeFitResult oe_fit(const OeProblem& problem, const ObservationSet& obs,
                   const Eigen::VectorXd& init, const OeOptions& options = {});

// As oe_fit, with theta[fixed_index] held at its initial value.
OeFitResult oe_fit_fixed(const OeProblem& problem, const ObservationSet& obs,
                         const Eigen::VectorXd& init, Eigen::Index fixed_index,
                         const OeOptions& options = {});

struct ProfileCurve {
    Eigen::Index param_index = 0;
    Eigen::VectorXd grid;
    Eigen::VectorXd values;
    std::vector<bool> inner_converged;
    Eigen::VectorXd theta_hat;
    double min_objective = 0.0;
    double threshold = 0.0;
    std::optional<double> ci_lo, ci_hi;  // nullopt = open-ended

    bool bounded() const { return ci_lo.has_value() && ci_hi.has_value(); }
};

double chi2_quantile(double p, double dof);

ProfileCurve profile_likelihood(const OeProblem& problem, const ObservationSet& obs,
                                Eigen::Index param_index, const Eigen::VectorXd& fix_grid,
                                const Eigen::VectorXd& init, const OeOptions& options = {});

struct SweepConfig;

struct TimingRow {
    std::string estimator;
    double e = 0.0;
    std::size_t replicate = 0;
    double walltime = 0.0;
    double rel_err = 0.0;
    bool converged = false;
};

struct TimingSummary {
    std::string estimator;
    std::size_t n = 0;
    double median_walltime = 0.0;
    double median_rel_err = 0.0;
    double failure_rate = 0.0;
};

struct TimingTable {
    std::vector<TimingSummary> summary;
    std::vector<TimingRow> scatter;
};

// Runs WENDy and output error on the same n datasets at every e of config.e_grid.
TimingTable timing_compare(const SweepConfig& config, std::size_t n);

}  // namespace weakid
