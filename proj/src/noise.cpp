#include "weakid/noise.hpp"

#include "weakid/error.hpp"

#include <cmath>
#include <random>

namespace weakid {

std::string to_string(NoiseKind k) {
    return k == NoiseKind::AdditiveGaussian ? "additive" : "lognormal";
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "additive") return NoiseKind::AdditiveGaussian;
    if (s == "lognormal") return NoiseKind::MultiplicativeLognormal;
    throw ConfigError("unknown noise kind '" + s + "'");
}

double rms(const Eigen::VectorXd& series) {
    if (series.size() == 0) throw ConfigError("rms of an empty series");
    return std::sqrt(series.squaredNorm() / static_cast<double>(series.size()));
}

double noise_sigma(const Eigen::VectorXd& truth, double e, NoiseKind kind,
                   LognormalScaling scaling) {
    if (!(e >= 0.0)) throw ConfigError("observation error ratio must be nonnegative");
    if (kind == NoiseKind::AdditiveGaussian) return e * rms(truth);
    if (scaling == LognormalScaling::Plain) return e;
    const double r = rms(truth);
    if (r <= 1.0)
        throw ConfigError("lognormal scaling e*log(RMS) needs RMS > 1 (got " + std::to_string(r) +
                          "); use lognormal_scaling = plain");
    return e * std::log(r);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t e_index, std::uint64_t replicate) {
    return splitmix64(splitmix64(splitmix64(master) ^ e_index) ^ replicate);
}

ObservationSet corrupt(const Eigen::VectorXd& truth, const TimeGrid& grid, double e,
                       NoiseKind kind, std::uint64_t seed, LognormalScaling scaling) {
    if (static_cast<std::size_t>(truth.size()) != grid.size())
        throw ConfigError("corrupt: truth length does not match grid");
    ObservationSet obs{grid, truth, truth, e, kind, seed, noise_sigma(truth, e, kind, scaling)};
    if (obs.sigma == 0.0) return obs;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, obs.sigma);
    for (Eigen::Index m = 0; m < truth.size(); ++m) {
        const double eps = normal(rng);
        if (kind == NoiseKind::AdditiveGaussian)
            obs.values[m] = truth[m] + eps;
        else
            obs.values[m] = truth[m] * std::exp(eps);
    }
    return obs;
}

}  // namespace weakid
