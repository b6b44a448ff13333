#include "weakid/weakform.hpp"

#include "weakid/error.hpp"

#include <cmath>
#include <limits>

namespace weakid {

namespace {

double condition_number(const Eigen::MatrixXd& G) {
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(G).singularValues();
    if (s.size() == 0) return std::numeric_limits<double>::infinity();
    const double smin = s[s.size() - 1];
    return smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

void require_finite(const Eigen::VectorXd& obs, const TestFunctionBasis& basis) {
    if (static_cast<std::size_t>(obs.size()) != basis.grid.size())
        throw ConfigError("observation length does not match the basis grid");
    if (!obs.allFinite()) throw InvalidStateError("observations contain non-finite values");
}

WeakLinearSystem finish(Eigen::MatrixXd G, Eigen::VectorXd b) {
    WeakLinearSystem sys{std::move(G), std::move(b), 0.0};
    sys.condition_number = condition_number(sys.G);
    return sys;
}

// z_j = sum_m u_m * dC_m/dy_j for C = cumulative_integral(y). Only the
// grid spacing enters, so C_m = sum_{i<m} h_i (y_i + y_{i+1}) / 2.
Eigen::RowVectorXd cumulative_adjoint(const Eigen::RowVectorXd& u, const Eigen::VectorXd& t) {
    const Eigen::Index n = u.size();
    Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(n);
    double tail = 0.0;  // sum_{m > i} u_m
    for (Eigen::Index i = n - 2; i >= 0; --i) {
        tail += u[i + 1];
        const double half = 0.5 * (t[i + 1] - t[i]) * tail;
        z[i] += half;
        z[i + 1] += half;
    }
    return z;
}

}  // namespace

Eigen::VectorXd cumulative_integral(const Eigen::VectorXd& series, const TimeGrid& grid) {
    if (static_cast<std::size_t>(series.size()) != grid.size())
        throw ConfigError("cumulative_integral: length mismatch");
    const Eigen::VectorXd t = grid.points();
    Eigen::VectorXd out(series.size());
    out[0] = 0.0;
    for (Eigen::Index m = 1; m < series.size(); ++m)
        out[m] = out[m - 1] + 0.5 * (t[m] - t[m - 1]) * (series[m - 1] + series[m]);
    return out;
}

std::string to_string(WeakVariant v) {
    switch (v) {
        case WeakVariant::BloodDiffusionIO: return "blood_io";
        case WeakVariant::SirIO: return "sir_io";
        case WeakVariant::SirIOAlt: return "sir_io_alt";
    }
    return "?";
}

WeakVariant variant_from_string(const std::string& s) {
    if (s == "blood_io") return WeakVariant::BloodDiffusionIO;
    if (s == "sir_io") return WeakVariant::SirIO;
    if (s == "sir_io_alt") return WeakVariant::SirIOAlt;
    throw ConfigError("unknown weak-form variant '" + s + "'");
}

WeakLinearSystem assemble_blood(const Eigen::VectorXd& x, const TestFunctionBasis& basis) {
    require_finite(x, basis);
    const Eigen::ArrayXd d = x.array() + 1.0;
    if ((d.abs() < 1e-12).any())
        throw SingularDenominatorError("blood IO: observation too close to x1 = -1");
    Eigen::MatrixXd G(basis.size(), 3);
    G.col(0) = basis.phi0 * (x.array() / d).matrix();
    G.col(1) = -basis.phi1 * (x.array().square() / d).matrix();
    G.col(2) = basis.phi1 * d.inverse().matrix();
    return finish(std::move(G), -basis.phi2 * x);
}

WeakLinearSystem assemble_sir(const Eigen::VectorXd& I, const TestFunctionBasis& basis,
                              double alpha, double S0) {
    require_finite(I, basis);
    const Eigen::ArrayXd R = alpha * cumulative_integral(I, basis.grid).array();
    Eigen::MatrixXd G = -basis.phi0 * ((R + I.array() - S0) * I.array()).matrix();
    Eigen::VectorXd b = -basis.phi1 * I + alpha * (basis.phi0 * I);
    return finish(std::move(G), std::move(b));
}

WeakLinearSystem assemble_sir_alt(const Eigen::VectorXd& I, const TestFunctionBasis& basis,
                                  double alpha, double N) {
    require_finite(I, basis);
    const Eigen::ArrayXd Ia = I.array();
    const Eigen::ArrayXd S = N - alpha * cumulative_integral(I, basis.grid).array() - Ia;
    Eigen::MatrixXd G = basis.phi1 * (0.5 * (Ia.square() + S.square())).matrix() -
                        alpha * basis.phi0 * (Ia.square() + 2.0 * S * Ia).matrix();
    Eigen::VectorXd b = basis.phi2 * I - alpha * alpha * (basis.phi0 * I);
    return finish(std::move(G), std::move(b));
}

WeakLinearSystem BloodDiffusionIO::assemble(const Eigen::VectorXd& obs,
                                            const TestFunctionBasis& basis) const {
    return assemble_blood(obs, basis);
}

Eigen::MatrixXd BloodDiffusionIO::data_jacobian(const Eigen::VectorXd& x,
                                                const TestFunctionBasis& basis,
                                                const Eigen::VectorXd& w) const {
    require_finite(x, basis);
    const Eigen::ArrayXd d = x.array() + 1.0;
    const Eigen::ArrayXd d2 = d.square();
    // d/dx of x/(x+1), x^2/(x+1), 1/(x+1)
    const Eigen::RowVectorXd g0 = d2.inverse().matrix().transpose();
    const Eigen::RowVectorXd g1 = ((x.array().square() + 2.0 * x.array()) / d2).matrix().transpose();
    const Eigen::RowVectorXd g2 = (-d2.inverse()).matrix().transpose();
    Eigen::MatrixXd J = w[0] * (basis.phi0.array().rowwise() * g0.array()).matrix();
    J -= w[1] * (basis.phi1.array().rowwise() * g1.array()).matrix();
    J += w[2] * (basis.phi1.array().rowwise() * g2.array()).matrix();
    J += basis.phi2;
    return J;
}

Eigen::Vector3d BloodDiffusionIO::unknowns_from_params(const BloodDiffusionParams& p) {
    return {p.k21 * p.Ve, p.k12 + p.k21, p.k12 + p.k21 + p.Ve};
}

BloodDiffusionParams BloodDiffusionIO::params_from_unknowns(const Eigen::Vector3d& w) {
    const double Ve = w[2] - w[1];
    if (Ve == 0.0) throw ConfigError("w3 = w2 implies Ve = 0; k21 is undetermined");
    const double k21 = w[0] / Ve;
    return {w[1] - k21, k21, Ve};
}

WeakLinearSystem SirIO::assemble(const Eigen::VectorXd& obs, const TestFunctionBasis& basis) const {
    return assemble_sir(obs, basis, alpha_, S0_);
}

Eigen::MatrixXd SirIO::data_jacobian(const Eigen::VectorXd& I, const TestFunctionBasis& basis,
                                     const Eigen::VectorXd& w) const {
    require_finite(I, basis);
    const double beta = w[0];
    const Eigen::VectorXd t = basis.grid.points();
    const Eigen::ArrayXd R = alpha_ * cumulative_integral(I, basis.grid).array();
    // G = -phi0 * g(I, R) with g = (R + I - S0) I
    const Eigen::RowVectorXd gI = (R + 2.0 * I.array() - S0_).matrix().transpose();
    const Eigen::RowVectorXd gR = I.transpose();
    Eigen::MatrixXd J(basis.size(), I.size());
    for (Eigen::Index k = 0; k < basis.size(); ++k) {
        const Eigen::RowVectorXd p0 = basis.phi0.row(k);
        Eigen::RowVectorXd dG = -(p0.array() * gI.array()).matrix();
        dG -= alpha_ * cumulative_adjoint((p0.array() * gR.array()).matrix(), t);
        const Eigen::RowVectorXd db = -basis.phi1.row(k) + alpha_ * p0;
        J.row(k) = beta * dG - db;
    }
    return J;
}

WeakLinearSystem SirIOAlt::assemble(const Eigen::VectorXd& obs,
                                    const TestFunctionBasis& basis) const {
    return assemble_sir_alt(obs, basis, alpha_, N_);
}

Eigen::MatrixXd SirIOAlt::data_jacobian(const Eigen::VectorXd& I, const TestFunctionBasis& basis,
                                        const Eigen::VectorXd& w) const {
    require_finite(I, basis);
    const double beta = w[0];
    const Eigen::VectorXd t = basis.grid.points();
    const Eigen::ArrayXd Ia = I.array();
    const Eigen::ArrayXd S = N_ - alpha_ * cumulative_integral(I, basis.grid).array() - Ia;
    // G = phi1 A + phi0 B, A = (I^2 + S^2)/2, B = -alpha (I^2 + 2 S I), S = N - R - I.
    const Eigen::ArrayXd AI = Ia, AS = S;
    const Eigen::ArrayXd BI = -2.0 * alpha_ * (Ia + S), BS = -2.0 * alpha_ * Ia;
    Eigen::MatrixXd J(basis.size(), I.size());
    for (Eigen::Index k = 0; k < basis.size(); ++k) {
        const Eigen::ArrayXd p0 = basis.phi0.row(k).transpose().array();
        const Eigen::ArrayXd p1 = basis.phi1.row(k).transpose().array();
        const Eigen::ArrayXd uS = p1 * AS + p0 * BS;  // coefficient of dS_m
        // dS_m/dI_j = -delta_mj - alpha dC_m/dI_j
        Eigen::RowVectorXd dG = (p1 * AI + p0 * BI - uS).matrix().transpose();
        dG -= alpha_ * cumulative_adjoint(uS.matrix().transpose(), t);
        const Eigen::RowVectorXd db =
            basis.phi2.row(k) - alpha_ * alpha_ * basis.phi0.row(k);
        J.row(k) = beta * dG - db;
    }
    return J;
}

}  // namespace weakid
