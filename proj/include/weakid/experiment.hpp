#pragma once

#include "weakid/models.hpp"
#include "weakid/testfn.hpp"
#include "weakid/weakform.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace weakid {

enum class ModelKind { BloodDiffusion, Sir };

std::string to_string(ModelKind m);
ModelKind model_kind_from_string(const std::string& s);

// One forward model, its observation and the weak-form setup used to invert it.
struct Experiment {
    ModelKind model = ModelKind::BloodDiffusion;
    Eigen::VectorXd params;  // (k12, k21, Ve) or (beta, alpha, N)
    Eigen::VectorXd y0;
    TimeGrid grid;
    Eigen::Index observed = 0;
    WeakVariant variant = WeakVariant::BloodDiffusionIO;
    TestFunctionSpec test_function;
    Eigen::Index K = 15;
    QuadratureRule quadrature = QuadratureRule::Trapezoid;
    double rtol = 1e-10;
    double atol = 1e-10;
};

OdeModel ode_model(const Experiment& ex);
Trajectory simulate(const Experiment& ex);
Eigen::VectorXd observed_truth(const Experiment& ex);

std::vector<std::string> unknown_names(const Experiment& ex);
Eigen::VectorXd true_unknowns(const Experiment& ex);
// Returns a copy whose mechanistic parameters reproduce the given weak-form unknowns.
Experiment with_unknowns(Experiment ex, const Eigen::VectorXd& w);
// Maps a full mechanistic parameter vector to the weak-form unknowns.
Eigen::VectorXd unknowns_from_params(const Experiment& ex, const Eigen::VectorXd& params);

std::unique_ptr<WeakObservationModel> make_weak_model(const Experiment& ex);
TestFunctionBasis make_basis(const Experiment& ex);

void validate(const Experiment& ex);

}  // namespace weakid
