#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace weakid {

class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double t0, double tM, std::size_t n_points);

    double t0() const { return t0_; }
    double tM() const { return tM_; }
    std::size_t size() const { return n_; }
    double step() const { return (tM_ - t0_) / static_cast<double>(n_ - 1); }
    double operator[](std::size_t m) const;
    Eigen::VectorXd points() const;

private:
    double t0_ = 0.0;
    double tM_ = 1.0;
    std::size_t n_ = 2;
};

struct Trajectory {
    TimeGrid grid;
    Eigen::MatrixXd states;  // rows = time points

    Eigen::VectorXd component(Eigen::Index i) const { return states.col(i); }
};

struct OdeModel {
    using Rhs = std::function<Eigen::VectorXd(const Eigen::VectorXd& state,
                                              const Eigen::VectorXd& params, double t)>;
    std::string name;
    std::size_t state_dim = 0;
    std::vector<std::string> param_names;
    Rhs rhs;
};

struct BloodDiffusionParams {
    double k12 = 0.0;
    double k21 = 0.0;
    double Ve = 0.0;

    Eigen::VectorXd vector() const { return Eigen::Vector3d(k12, k21, Ve); }
    static BloodDiffusionParams from_vector(const Eigen::VectorXd& p);
};

struct SirParams {
    double beta = 0.0;
    double alpha = 0.0;
    double N = 1.0;

    Eigen::VectorXd vector() const { return Eigen::Vector3d(beta, alpha, N); }
    static SirParams from_vector(const Eigen::VectorXd& p);
};

Eigen::Vector2d blood_rhs(const Eigen::Vector2d& state, const BloodDiffusionParams& p);
Eigen::Vector3d sir_rhs(const Eigen::Vector3d& state, const SirParams& p);

// "blood_diffusion" or "sir"; throws ConfigError otherwise.
OdeModel model_by_name(const std::string& name);
OdeModel blood_diffusion_model();
OdeModel sir_model();

// Dormand-Prince 4(5), stepping exactly onto each grid point.
Trajectory integrate(const OdeModel& model, const Eigen::VectorXd& params,
                     const Eigen::VectorXd& y0, const TimeGrid& grid,
                     double rtol = 1e-10, double atol = 1e-10);

}  // namespace weakid
