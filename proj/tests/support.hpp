#pragma once

#include "weakid/config.hpp"
#include "weakid/experiment.hpp"
#include "weakid/identifiability.hpp"

#include <Eigen/Dense>

#include <string>

namespace weakid::testing {

inline Settings preset(const std::string& name) {
    return Settings::from_file(std::string(WEAKID_CONFIG_DIR) + "/" + name);
}

inline Experiment example1() { return experiment_from(preset("example1-blood.cfg")); }
inline Experiment example2() { return experiment_from(preset("example2-sir.cfg")); }

inline SweepConfig sweep1() { return sweep_config_from(preset("example1-blood.cfg")); }
inline SweepConfig sweep2() { return sweep_config_from(preset("example2-sir.cfg")); }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace weakid::testing
