#include "weakid/wendy.hpp"

#include "weakid/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace weakid {

namespace {

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> checked_qr(const Eigen::MatrixXd& G, double rank_tol) {
    if (!G.allFinite()) throw InvalidStateError("regression matrix has non-finite entries");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G.rows(), G.cols());
    qr.setThreshold(rank_tol);
    qr.compute(G);
    const Eigen::Index p = G.cols();
    const bool zero = G.cwiseAbs().maxCoeff() == 0.0;
    const Eigen::Index r = zero ? 0 : qr.rank();
    if (r < p || G.rows() < p) {
        std::vector<std::size_t> cols;
        std::string names;
        for (Eigen::Index i = r; i < p; ++i) {
            const auto c = static_cast<std::size_t>(qr.colsPermutation().indices()[i]);
            cols.push_back(c);
            names += (names.empty() ? "" : ", ") + std::to_string(c);
        }
        throw RankDeficientError("regression matrix is rank deficient (rank " + std::to_string(r) +
                                     " < " + std::to_string(p) + "); dependent columns: " + names,
                                 std::move(cols));
    }
    return qr;
}

}  // namespace

Eigen::VectorXd ols_solve(const WeakLinearSystem& sys, double rank_tol) {
    return checked_qr(sys.G, rank_tol).solve(sys.b);
}

Eigen::MatrixXd residual_covariance(const Eigen::MatrixXd& J, const NoiseSpec& noise,
                                    const Eigen::VectorXd& obs) {
    const double s2 = noise.sigma * noise.sigma;
    Eigen::MatrixXd S;
    if (noise.kind == NoiseKind::AdditiveGaussian) {
        S = s2 * (J * J.transpose());
    } else {
        Eigen::VectorXd d = noise.lognormal_covariance == LognormalCovariance::Linear
                                ? Eigen::VectorXd(obs.cwiseMax(0.0))
                                : Eigen::VectorXd(obs.array().square());
        S = s2 * (J * d.asDiagonal() * J.transpose());
    }
    const double jitter = 1e-10 * S.trace() / static_cast<double>(S.rows());
    S.diagonal().array() += jitter;
    return S;
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

std::vector<ConfidenceInterval> confidence_intervals(const Estimate& est, double level) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must be in (0, 1)");
    const double z = normal_quantile(0.5 * (1.0 + level));
    std::vector<ConfidenceInterval> ci;
    for (Eigen::Index i = 0; i < est.w_hat.size(); ++i) {
        double v = est.S_w(i, i);
        if (v < -1e-12 || std::isnan(v))
            throw CovarianceError("parameter covariance has a negative diagonal entry");
        const double hw = z * std::sqrt(std::max(v, 0.0));
        ci.push_back({est.w_hat[i] - hw, est.w_hat[i] + hw});
    }
    return ci;
}

double estimate_sigma(const Eigen::VectorXd& obs, const TimeGrid& grid) {
    if (static_cast<std::size_t>(obs.size()) != grid.size())
        throw ConfigError("estimate_sigma: length mismatch");
    if (obs.size() < 7) throw ConfigError("estimate_sigma needs at least 7 samples");
    // 6th difference annihilates polynomials of degree <= 5.
    static constexpr double stencil[7] = {1, -6, 15, -20, 15, -6, 1};
    const double norm = std::sqrt(924.0);
    double acc = 0.0;
    const Eigen::Index n = obs.size() - 6;
    for (Eigen::Index m = 0; m < n; ++m) {
        double d = 0.0;
        for (int j = 0; j < 7; ++j) d += stencil[j] * obs[m + j];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n)) / norm;
}

Estimate irls_estimate(const WeakObservationModel& model, const Eigen::VectorXd& obs,
                       const TestFunctionBasis& basis, const NoiseSpec& noise_in,
                       const IrlsOptions& options) {
    if (options.max_iter < 1) throw ConfigError("IRLS max_iter must be >= 1");
    NoiseSpec noise = noise_in;
    if (!noise.known) {
        if (noise.kind == NoiseKind::AdditiveGaussian) {
            noise.sigma = estimate_sigma(obs, basis.grid);
        } else {
            if ((obs.array() <= 0.0).any())
                throw ConfigError("cannot estimate lognormal sigma from nonpositive data");
            noise.sigma = estimate_sigma(obs.array().log().matrix(), basis.grid);
        }
    }
    if (!(noise.sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");

    const WeakLinearSystem sys = model.assemble(obs, basis);
    const auto qr = checked_qr(sys.G, 1e-12);
    const Eigen::Index p = sys.G.cols();

    Estimate est;
    est.sigma_used = noise.sigma;
    est.w_hat = qr.solve(sys.b);
    est.iterations = 1;

    if (noise.sigma == 0.0) {
        // Identity weighting: the OLS solution is the fixed point.
        est.converged = true;
        est.S_w = Eigen::MatrixXd::Zero(p, p);
        est.ci = confidence_intervals(est, options.level);
        return est;
    }

    const auto gls_step = [&](const Eigen::MatrixXd& S_R, Eigen::VectorXd& w) {
        const Eigen::LLT<Eigen::MatrixXd> llt(S_R);
        if (llt.info() != Eigen::Success) return false;
        const Eigen::MatrixXd Gt = llt.matrixL().solve(sys.G);
        const Eigen::VectorXd bt = llt.matrixL().solve(sys.b);
        w = Gt.colPivHouseholderQr().solve(bt);
        return w.allFinite();
    };

    Eigen::MatrixXd S_R;
    for (int it = 1; it <= options.max_iter; ++it) {
        S_R = residual_covariance(model.data_jacobian(obs, basis, est.w_hat), noise, obs);
        Eigen::VectorXd w_next;
        if (!gls_step(S_R, w_next)) break;
        const double change = (w_next - est.w_hat).norm() / est.w_hat.norm();
        est.w_hat = std::move(w_next);
        est.iterations = it + 1;
        if (change < options.tol) {
            est.converged = true;
            break;
        }
    }

    S_R = residual_covariance(model.data_jacobian(obs, basis, est.w_hat), noise, obs);
    if (options.covariance == CovarianceForm::Sandwich) {
        const Eigen::MatrixXd A = qr.solve(Eigen::MatrixXd::Identity(sys.G.rows(), sys.G.rows()));
        est.S_w = A * S_R * A.transpose();
    } else {
        const Eigen::LLT<Eigen::MatrixXd> llt(S_R);
        if (llt.info() != Eigen::Success) throw CovarianceError("residual covariance is not positive definite");
        const Eigen::MatrixXd Gt = llt.matrixL().solve(sys.G);
        est.S_w = (Gt.transpose() * Gt).inverse();
    }
    est.S_w = 0.5 * (est.S_w + est.S_w.transpose()).eval();
    if (!est.S_w.allFinite()) throw CovarianceError("parameter covariance is not finite");
    est.ci = confidence_intervals(est, options.level);
    return est;
}

}  // namespace weakid
