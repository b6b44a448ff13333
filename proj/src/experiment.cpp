#include "weakid/experiment.hpp"

#include "weakid/error.hpp"

#include <cmath>

namespace weakid {

std::string to_string(ModelKind m) {
    return m == ModelKind::BloodDiffusion ? "blood_diffusion" : "sir";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "blood_diffusion") return ModelKind::BloodDiffusion;
    if (s == "sir") return ModelKind::Sir;
    throw ConfigError("unknown model '" + s + "'");
}

void validate(const Experiment& ex) {
    if (ex.params.size() != 3) throw ConfigError("model needs exactly 3 mechanistic parameters");
    if (!ex.params.allFinite()) throw ConfigError("model parameters must be finite");
    if (ex.model == ModelKind::BloodDiffusion) {
        if ((ex.params.array() < 0.0).any())
            throw ConfigError("blood_diffusion parameters must be nonnegative");
        if (ex.y0.size() != 2) throw ConfigError("blood_diffusion initial state needs 2 entries");
        if (ex.variant != WeakVariant::BloodDiffusionIO)
            throw ConfigError("blood_diffusion requires the blood_io weak form");
        if (ex.observed != 0) throw ConfigError("blood_diffusion weak form observes x1 (index 0)");
    } else {
        if (ex.params[0] < 0.0 || ex.params[1] < 0.0 || !(ex.params[2] > 0.0))
            throw ConfigError("sir requires beta >= 0, alpha >= 0, N > 0");
        if (ex.y0.size() != 3) throw ConfigError("sir initial state needs 3 entries");
        if (ex.variant == WeakVariant::BloodDiffusionIO)
            throw ConfigError("sir requires the sir_io or sir_io_alt weak form");
        if (ex.observed != 1) throw ConfigError("sir weak forms observe I (index 1)");
    }
    if (ex.K < 1) throw ConfigError("K must be positive");
}

OdeModel ode_model(const Experiment& ex) {
    return ex.model == ModelKind::BloodDiffusion ? blood_diffusion_model() : sir_model();
}

Trajectory simulate(const Experiment& ex) {
    validate(ex);
    return integrate(ode_model(ex), ex.params, ex.y0, ex.grid, ex.rtol, ex.atol);
}

Eigen::VectorXd observed_truth(const Experiment& ex) {
    return simulate(ex).component(ex.observed);
}

std::vector<std::string> unknown_names(const Experiment& ex) {
    if (ex.model == ModelKind::BloodDiffusion) return {"w1", "w2", "w3"};
    return {"beta"};
}

Eigen::VectorXd unknowns_from_params(const Experiment& ex, const Eigen::VectorXd& params) {
    if (ex.model == ModelKind::BloodDiffusion)
        return BloodDiffusionIO::unknowns_from_params(BloodDiffusionParams::from_vector(params));
    return Eigen::VectorXd::Constant(1, params[0]);
}

Eigen::VectorXd true_unknowns(const Experiment& ex) { return unknowns_from_params(ex, ex.params); }

Experiment with_unknowns(Experiment ex, const Eigen::VectorXd& w) {
    if (ex.model == ModelKind::BloodDiffusion) {
        if (w.size() != 3) throw ConfigError("blood_diffusion has 3 unknowns");
        ex.params = BloodDiffusionIO::params_from_unknowns(w).vector();
    } else {
        if (w.size() != 1) throw ConfigError("sir has 1 unknown");
        ex.params[0] = w[0];
    }
    return ex;
}

std::unique_ptr<WeakObservationModel> make_weak_model(const Experiment& ex) {
    switch (ex.variant) {
        case WeakVariant::BloodDiffusionIO: return std::make_unique<BloodDiffusionIO>();
        case WeakVariant::SirIO: return std::make_unique<SirIO>(ex.params[1], ex.y0[0]);
        case WeakVariant::SirIOAlt: return std::make_unique<SirIOAlt>(ex.params[1], ex.params[2]);
    }
    throw ConfigError("unknown weak-form variant");
}

TestFunctionBasis make_basis(const Experiment& ex) {
    return build_basis(ex.test_function, ex.K, ex.grid, ex.quadrature);
}

}  // namespace weakid
