#pragma once

#include "weakid/baseline.hpp"
#include "weakid/experiment.hpp"
#include "weakid/noise.hpp"
#include "weakid/wendy.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace weakid {

enum class Estimator { Wendy, OutputError };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct SweepConfig {
    Experiment experiment;
    std::vector<double> e_grid;
    std::vector<double> q_grid;
    std::size_t D = 1000;
    NoiseKind kind = NoiseKind::AdditiveGaussian;
    LognormalScaling lognormal_scaling = LognormalScaling::LogRms;
    LognormalCovariance lognormal_covariance = LognormalCovariance::Linear;
    bool sigma_known = true;
    std::uint64_t master_seed = 1;
    Estimator estimator = Estimator::Wendy;
    IrlsOptions irls;
    OeOptions oe;
    unsigned threads = 0;  // 0 = hardware concurrency
    bool keep_estimates = false;
};

void validate(const SweepConfig& config);

struct ReplicateRecord {
    std::size_t e_index = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    bool ok = false;         // estimator returned without error
    bool converged = false;
    Eigen::VectorXd w_hat;
    std::vector<ConfidenceInterval> ci;  // empty for output error
    double walltime = 0.0;
    std::string error;
};

// Draws the dataset for (e_index, replicate) and runs the configured estimator.
ReplicateRecord run_replicate(const SweepConfig& config, const Eigen::VectorXd& truth,
                              const TestFunctionBasis& basis, std::size_t e_index,
                              std::size_t replicate);

struct ParamStats {
    double mse = 0.0;
    double rel_err = 0.0;
    double coverage = 0.0;  // NaN when the estimator reports no intervals
    double mean = 0.0;
    double median_ci_width = 0.0;  // NaN without intervals
};

struct LevelResult {
    double e = 0.0;
    double sigma = 0.0;
    std::vector<ParamStats> params;
    double rel_err_norm = 0.0;         // mean of |w_hat - w| / |w|
    double median_rel_err_norm = 0.0;
    std::size_t n_converged = 0;
    std::size_t n_failed = 0;
    double median_walltime = 0.0;
};

struct SweepResult {
    std::vector<std::string> names;
    Eigen::VectorXd true_w;
    std::size_t D = 0;
    std::vector<LevelResult> levels;
    std::vector<ReplicateRecord> replicates;  // only with keep_estimates
};

SweepResult run_sweep(const SweepConfig& config);

// Aggregates already computed replicates (ordered by e_index, replicate).
SweepResult aggregate(const SweepConfig& config, const std::vector<ReplicateRecord>& records);

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct EqMap {
    std::vector<double> e_grid;
    std::vector<double> q_grid;
    std::vector<std::string> names;
    std::vector<BoolGrid> per_param;  // rows = e, cols = q
    BoolGrid model;
};

enum class EqMode { ConvergedOnly, Strict };

EqMap eq_map(const SweepResult& result, const Eigen::VectorXd& true_w,
             const std::vector<double>& q_grid, EqMode mode = EqMode::ConvergedOnly);
// Reference magnitudes taken from the replicate-mean estimate at each e.
EqMap eq_map_a_posteriori(const SweepResult& result, const std::vector<double>& q_grid,
                          EqMode mode = EqMode::ConvergedOnly);

// Smallest q on the grid satisfying the criterion; param < 0 selects the model-level map.
std::optional<double> min_q(const EqMap& map, std::size_t e_index, int param = -1);

struct MinQMap {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> e_grid;
    std::vector<std::vector<std::optional<double>>> q;  // [point][e]
};

MinQMap min_q_map(const SweepConfig& base, const std::vector<Eigen::VectorXd>& param_grid,
                  const std::vector<double>& e_grid, std::size_t D, std::uint64_t seed);

struct HyperRow {
    int degree = 0;
    double radius = 0.0;
    bool admissible = false;
    double rel_err_norm = 0.0;
    std::vector<double> rel_err;
    std::size_t n_converged = 0;
    std::string note;
};

struct HyperScan {
    TestFunctionFamily family = TestFunctionFamily::Polynomial;
    std::vector<HyperRow> rows;
    std::optional<std::size_t> best;
};

HyperScan hyperparam_scan(const SweepConfig& base, TestFunctionFamily family,
                          const std::vector<int>& degrees, const std::vector<double>& radii);

}  // namespace weakid
