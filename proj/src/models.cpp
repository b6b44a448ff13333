#include "weakid/models.hpp"

#include "weakid/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace weakid {

TimeGrid::TimeGrid(double t0, double tM, std::size_t n_points) : t0_(t0), tM_(tM), n_(n_points) {
    if (!(std::isfinite(t0) && std::isfinite(tM)) || !(tM > t0))
        throw ConfigError("time grid requires finite tM > t0");
    if (n_points < 2) throw ConfigError("time grid requires at least 2 points");
}

double TimeGrid::operator[](std::size_t m) const {
    if (m + 1 == n_) return tM_;
    return t0_ + static_cast<double>(m) * step();
}

Eigen::VectorXd TimeGrid::points() const {
    Eigen::VectorXd t(static_cast<Eigen::Index>(n_));
    for (std::size_t m = 0; m < n_; ++m) t[static_cast<Eigen::Index>(m)] = (*this)[m];
    return t;
}

BloodDiffusionParams BloodDiffusionParams::from_vector(const Eigen::VectorXd& p) {
    if (p.size() != 3) throw ConfigError("blood_diffusion expects 3 parameters (k12, k21, Ve)");
    return {p[0], p[1], p[2]};
}

SirParams SirParams::from_vector(const Eigen::VectorXd& p) {
    if (p.size() != 3) throw ConfigError("sir expects 3 parameters (beta, alpha, N)");
    return {p[0], p[1], p[2]};
}

Eigen::Vector2d blood_rhs(const Eigen::Vector2d& x, const BloodDiffusionParams& p) {
    if (!x.allFinite()) throw InvalidStateError("blood_rhs: non-finite state");
    const double denom = 1.0 + x[0];
    if (denom == 0.0) throw InvalidStateError("blood_rhs: 1 + x1 = 0");
    const double transfer = p.k12 * x[0] - p.k21 * x[1];
    return {-transfer - p.Ve * x[0] / denom, transfer};
}

Eigen::Vector3d sir_rhs(const Eigen::Vector3d& x, const SirParams& p) {
    if (!x.allFinite()) throw InvalidStateError("sir_rhs: non-finite state");
    const double infection = p.beta * x[0] * x[1];
    const double recovery = p.alpha * x[1];
    return {-infection, infection - recovery, recovery};
}

OdeModel blood_diffusion_model() {
    return {"blood_diffusion", 2, {"k12", "k21", "Ve"},
            [](const Eigen::VectorXd& x, const Eigen::VectorXd& p, double) -> Eigen::VectorXd {
                return blood_rhs(Eigen::Vector2d(x[0], x[1]), BloodDiffusionParams::from_vector(p));
            }};
}

OdeModel sir_model() {
    return {"sir", 3, {"beta", "alpha", "N"},
            [](const Eigen::VectorXd& x, const Eigen::VectorXd& p, double) -> Eigen::VectorXd {
                return sir_rhs(Eigen::Vector3d(x[0], x[1], x[2]), SirParams::from_vector(p));
            }};
}

OdeModel model_by_name(const std::string& name) {
    if (name == "blood_diffusion") return blood_diffusion_model();
    if (name == "sir") return sir_model();
    throw ConfigError("unknown model '" + name + "'");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b*, with b* the embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Trajectory integrate(const OdeModel& model, const Eigen::VectorXd& params,
                     const Eigen::VectorXd& y0, const TimeGrid& grid, double rtol, double atol) {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("integrate: rtol and atol must be positive");
    if (static_cast<std::size_t>(y0.size()) != model.state_dim)
        throw ConfigError("integrate: initial state has wrong dimension for " + model.name);
    if (!y0.allFinite()) throw InvalidStateError("integrate: non-finite initial state");

    const auto n = grid.size();
    Trajectory out{grid, Eigen::MatrixXd(static_cast<Eigen::Index>(n), y0.size())};
    out.states.row(0) = y0.transpose();

    const auto f = [&](double t, const Eigen::VectorXd& y) { return model.rhs(y, params, t); };

    double t = grid.t0();
    Eigen::VectorXd y = y0;
    Eigen::VectorXd k1 = f(t, y);
    double h = std::min(grid.step(), 1e-3 * (grid.tM() - grid.t0()));
    constexpr std::size_t max_steps = 5'000'000;
    std::size_t steps = 0;

    for (std::size_t m = 1; m < n; ++m) {
        const double target = grid[m];
        while (t < target) {
            if (++steps > max_steps) throw IntegrationError("integrate: step budget exhausted", t);
            if (target - t <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
                t = target;  // rounding residue from the previous step
                break;
            }
            bool last = false;
            double hs = h;
            // Stretch slightly rather than leave a sliver before the grid point.
            if (t + 1.01 * hs >= target) {
                hs = target - t;
                last = true;
            }
            if (hs <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
                throw IntegrationError("integrate: step size underflow", t);

            Eigen::VectorXd y_new, k7;
            double err = std::numeric_limits<double>::infinity();
            try {
                const Eigen::VectorXd k2 = f(t + c2 * hs, y + hs * a21 * k1);
                const Eigen::VectorXd k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
                const Eigen::VectorXd k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
                const Eigen::VectorXd k5 =
                    f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
                const Eigen::VectorXd k6 =
                    f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
                y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
                k7 = f(t + hs, y_new);
                const Eigen::VectorXd est =
                    hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
                const Eigen::ArrayXd scale =
                    atol + rtol * y.array().abs().max(y_new.array().abs());
                err = std::sqrt((est.array() / scale).square().mean());
            } catch (const InvalidStateError&) {
                err = std::numeric_limits<double>::infinity();
            }
            if (!std::isfinite(err)) {
                h = 0.25 * hs;
                continue;
            }
            const double factor =
                err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                t = last ? target : t + hs;
                y = std::move(y_new);
                k1 = std::move(k7);
                // A step clipped to the grid says little about the natural step size.
                if (!last || factor < 1.0) h = hs * factor;
            } else {
                h = hs * std::min(1.0, factor);
            }
        }
        out.states.row(static_cast<Eigen::Index>(m)) = y.transpose();
    }
    return out;
}

}  // namespace weakid
