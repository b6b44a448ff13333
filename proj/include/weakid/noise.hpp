#pragma once

#include "weakid/models.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace weakid {

enum class NoiseKind { AdditiveGaussian, MultiplicativeLognormal };

std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);

// How e maps to the log-scale sigma of lognormal noise.
enum class LognormalScaling { LogRms, Plain };

struct ObservationSet {
    TimeGrid grid;
    Eigen::VectorXd values;
    Eigen::VectorXd truth;
    double e = 0.0;
    NoiseKind kind = NoiseKind::AdditiveGaussian;
    std::uint64_t seed = 0;
    double sigma = 0.0;
};

double rms(const Eigen::VectorXd& series);

double noise_sigma(const Eigen::VectorXd& truth, double e, NoiseKind kind,
                   LognormalScaling scaling = LognormalScaling::LogRms);

ObservationSet corrupt(const Eigen::VectorXd& truth, const TimeGrid& grid, double e,
                       NoiseKind kind, std::uint64_t seed,
                       LognormalScaling scaling = LognormalScaling::LogRms);

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t e_index, std::uint64_t replicate);

}  // namespace weakid
