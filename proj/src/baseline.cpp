#include "weakid/baseline.hpp"

#include "weakid/error.hpp"
#include "weakid/identifiability.hpp"
#include "weakid/parallel.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace weakid {

OeProblem oe_problem(const Experiment& ex, OeSpace space) {
    validate(ex);
    OeProblem p;
    p.model = ode_model(ex);
    p.y0 = ex.y0;
    p.observed = ex.observed;
    const Eigen::VectorXd base = ex.params;
    if (ex.model == ModelKind::Sir) {
        p.names = {"beta"};
        p.to_params = [base](const Eigen::VectorXd& th) {
            Eigen::VectorXd full = base;
            full[0] = th[0];
            return full;
        };
        p.bounds = Bounds{Eigen::VectorXd::Zero(1),
                          Eigen::VectorXd::Constant(1, std::numeric_limits<double>::infinity())};
        return p;
    }
    if (space == OeSpace::Mechanistic) {
        p.names = {"k12", "k21", "Ve"};
        p.to_params = [](const Eigen::VectorXd& th) { return th; };
        p.bounds = Bounds{Eigen::VectorXd::Zero(3),
                          Eigen::VectorXd::Constant(3, std::numeric_limits<double>::infinity())};
    } else {
        p.names = {"w1", "w2", "w3"};
        p.to_params = [](const Eigen::VectorXd& th) {
            return BloodDiffusionIO::params_from_unknowns(Eigen::Vector3d(th[0], th[1], th[2])).vector();
        };
    }
    return p;
}

Eigen::VectorXd oe_truth(const Experiment& ex, OeSpace space) {
    if (ex.model == ModelKind::Sir) return Eigen::VectorXd::Constant(1, ex.params[0]);
    return space == OeSpace::Mechanistic ? Eigen::VectorXd(ex.params) : true_unknowns(ex);
}

Eigen::VectorXd oe_to_unknowns(const Experiment& ex, OeSpace space, const Eigen::VectorXd& theta) {
    if (ex.model == ModelKind::Sir || space == OeSpace::Unknowns) return theta;
    return unknowns_from_params(ex, theta);
}

namespace {

std::optional<Eigen::VectorXd> residual(const OeProblem& problem, const Eigen::VectorXd& y,
                                        const TimeGrid& grid, const Eigen::VectorXd& theta,
                                        const OeOptions& opt) {
    try {
        const Trajectory tr =
            integrate(problem.model, problem.to_params(theta), problem.y0, grid, opt.rtol, opt.atol);
        Eigen::VectorXd r = tr.component(problem.observed) - y;
        if (!r.allFinite()) return std::nullopt;
        return r;
    } catch (const Error&) {
        return std::nullopt;
    }
}

Eigen::VectorXd clamp_to(const std::optional<Bounds>& b, Eigen::VectorXd th) {
    if (b) th = th.cwiseMax(b->lo).cwiseMin(b->hi);
    return th;
}

OeFitResult lm_fit(const OeProblem& problem, const ObservationSet& obs, const Eigen::VectorXd& init,
                   const std::vector<bool>& free, const OeOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    OeFitResult res;
    res.params = init;
    auto finish = [&](bool converged) {
        res.converged = converged;
        res.walltime = std::max(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1e-9);
        return res;
    };
    if (problem.bounds && ((init.array() < problem.bounds->lo.array()).any() ||
                           (init.array() > problem.bounds->hi.array()).any()))
        throw ConfigError("output-error initial guess lies outside the bounds");

    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < free.size(); ++i)
        if (free[i]) idx.push_back(static_cast<Eigen::Index>(i));
    const auto nf = static_cast<Eigen::Index>(idx.size());

    auto eval = [&](const Eigen::VectorXd& th) {
        ++res.evaluations;
        return residual(problem, obs.values, obs.grid, th, opt);
    };
    auto budget_left = [&] { return opt.max_evaluations <= 0 || res.evaluations < opt.max_evaluations; };

    Eigen::VectorXd theta = init;
    auto r = eval(theta);
    if (!r) {
        res.objective = std::numeric_limits<double>::infinity();
        return finish(false);
    }
    double f = r->squaredNorm();
    res.objective = f;
    if (nf == 0) return finish(true);

    double lambda = -1.0;
    for (res.iterations = 1; res.iterations <= opt.max_iter; ++res.iterations) {
        Eigen::MatrixXd J(r->size(), nf);
        for (Eigen::Index j = 0; j < nf; ++j) {
            const Eigen::Index i = idx[static_cast<std::size_t>(j)];
            const double scale = std::max({std::abs(theta[i]), 1e-2 * std::abs(init[i]), 1e-12});
            double h = opt.fd_step * scale;
            Eigen::VectorXd tp = theta;
            tp[i] += h;
            if (problem.bounds && tp[i] > problem.bounds->hi[i]) {
                h = -h;
                tp[i] = theta[i] + h;
            }
            if (!budget_left()) return finish(false);
            const auto rp = eval(tp);
            if (!rp) return finish(false);
            J.col(j) = (*rp - *r) / h;
        }
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * *r;
        Eigen::VectorXd D = A.diagonal();
        const double dmax = D.maxCoeff();
        if (!(dmax > 0.0)) return finish(true);  // objective flat in every free direction
        D = D.cwiseMax(1e-12 * dmax);
        if (lambda < 0.0) lambda = 1e-3;

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd Am = A;
            Am.diagonal() += lambda * D;
            const Eigen::VectorXd delta = Am.ldlt().solve(-g);
            Eigen::VectorXd trial = theta;
            for (Eigen::Index j = 0; j < nf; ++j) trial[idx[static_cast<std::size_t>(j)]] += delta[j];
            trial = clamp_to(problem.bounds, trial);
            const double step = (trial - theta).norm();
            if (step <= opt.xtol * (theta.norm() + opt.xtol)) return finish(true);
            if (!budget_left()) return finish(false);
            const auto rt = eval(trial);
            const double ft = rt ? rt->squaredNorm() : std::numeric_limits<double>::infinity();
            if (ft < f) {
                const bool small = (f - ft) <= opt.ftol * f;
                theta = trial;
                r = rt;
                f = ft;
                res.params = theta;
                res.objective = f;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (small) return finish(true);
            } else {
                lambda *= 4.0;
                if (lambda > 1e20) return finish(false);
            }
        }
    }
    res.iterations = opt.max_iter;
    return finish(false);
}

}  // namespace

double oe_objective(const OeProblem& problem, const Eigen::VectorXd& obs, const TimeGrid& grid,
                    const Eigen::VectorXd& theta, const OeOptions& options) {
    const auto r = residual(problem, obs, grid, theta, options);
    return r ? r->squaredNorm() : std::numeric_limits<double>::infinity();
}

OeFitResult oe_fit(const OeProblem& problem, const ObservationSet& obs,
                   const Eigen::VectorXd& init, const OeOptions& options) {
    return lm_fit(problem, obs, init, std::vector<bool>(static_cast<std::size_t>(init.size()), true),
                  options);
}

OeFitResult oe_fit_fixed(const OeProblem& problem, const ObservationSet& obs,
                         const Eigen::VectorXd& init, Eigen::Index fixed_index,
                         const OeOptions& options) {
    std::vector<bool> free(static_cast<std::size_t>(init.size()), true);
    if (fixed_index < 0 || fixed_index >= init.size()) throw ConfigError("profile index out of range");
    free[static_cast<std::size_t>(fixed_index)] = false;
    return lm_fit(problem, obs, init, free, options);
}

double chi2_quantile(double p, double dof) {
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

ProfileCurve profile_likelihood(const OeProblem& problem, const ObservationSet& obs,
                                Eigen::Index param_index, const Eigen::VectorXd& fix_grid,
                                const Eigen::VectorXd& init, const OeOptions& options) {
    const Eigen::Index n = fix_grid.size();
    if (n < 2) throw ConfigError("profile grid needs at least two points");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(fix_grid[i] > fix_grid[i - 1])) throw ConfigError("profile grid must be increasing");

    ProfileCurve pc;
    pc.param_index = param_index;
    pc.grid = fix_grid;
    pc.values.resize(n);
    pc.inner_converged.assign(static_cast<std::size_t>(n), false);

    const OeFitResult best = oe_fit(problem, obs, init, options);
    pc.theta_hat = best.params;
    const double th = best.params[param_index];
    if (th < fix_grid[0] || th > fix_grid[n - 1])
        throw ConfigError("profile grid does not bracket the fitted value");

    // Continue outward from the grid point nearest the optimum, warm-starting each fit.
    Eigen::Index c = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs(fix_grid[i] - th) < std::abs(fix_grid[c] - th)) c = i;
    auto run = [&](Eigen::Index i, Eigen::VectorXd& warm) {
        warm[param_index] = fix_grid[i];
        warm = clamp_to(problem.bounds, warm);
        const OeFitResult r = oe_fit_fixed(problem, obs, warm, param_index, options);
        pc.values[i] = r.objective;
        pc.inner_converged[static_cast<std::size_t>(i)] = r.converged;
        if (std::isfinite(r.objective)) warm = r.params;
    };
    Eigen::VectorXd warm = best.params;
    for (Eigen::Index i = c; i < n; ++i) run(i, warm);
    warm = best.params;
    for (Eigen::Index i = c - 1; i >= 0; --i) run(i, warm);

    pc.min_objective = std::min(best.objective, pc.values.minCoeff());
    const double dof = static_cast<double>(obs.values.size() - best.params.size());
    pc.threshold = pc.min_objective * (1.0 + chi2_quantile(0.95, 1.0) / dof);

    // Crossing points by linear interpolation; none on a side means open-ended.
    Eigen::Index lo_i = c, hi_i = c;
    while (lo_i > 0 && pc.values[lo_i - 1] <= pc.threshold) --lo_i;
    while (hi_i < n - 1 && pc.values[hi_i + 1] <= pc.threshold) ++hi_i;
    auto cross = [&](Eigen::Index inside, Eigen::Index outside) {
        const double v0 = pc.values[inside], v1 = pc.values[outside];
        const double s = std::isfinite(v1) && v1 != v0 ? (pc.threshold - v0) / (v1 - v0) : 1.0;
        return fix_grid[inside] + std::clamp(s, 0.0, 1.0) * (fix_grid[outside] - fix_grid[inside]);
    };
    if (pc.values[c] <= pc.threshold) {
        if (lo_i > 0) pc.ci_lo = cross(lo_i, lo_i - 1);
        if (hi_i < n - 1) pc.ci_hi = cross(hi_i, hi_i + 1);
    }
    return pc;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

}  // namespace

TimingTable timing_compare(const SweepConfig& config, std::size_t n) {
    validate(config);
    if (n < 1) throw ConfigError("timing_compare needs at least one replicate");
    const Eigen::VectorXd truth = observed_truth(config.experiment);
    const TestFunctionBasis basis = make_basis(config.experiment);
    const Eigen::VectorXd w = true_unknowns(config.experiment);

    TimingTable table;
    for (const Estimator est : {Estimator::Wendy, Estimator::OutputError}) {
        SweepConfig cfg = config;
        cfg.estimator = est;
        const std::size_t total = n * cfg.e_grid.size();
        std::vector<ReplicateRecord> recs(total);
        parallel_for(total, cfg.threads, [&](std::size_t i) {
            recs[i] = run_replicate(cfg, truth, basis, i / n, i % n);
        });
        TimingSummary s;
        s.estimator = to_string(est);
        s.n = total;
        std::vector<double> times, errs;
        std::size_t failures = 0;
        for (const auto& r : recs) {
            TimingRow row{s.estimator, cfg.e_grid[r.e_index], r.replicate, r.walltime,
                          std::numeric_limits<double>::quiet_NaN(), r.ok && r.converged};
            if (r.ok) row.rel_err = (r.w_hat - w).norm() / w.norm();
            times.push_back(r.walltime);
            if (row.converged)
                errs.push_back(row.rel_err);
            else
                ++failures;
            table.scatter.push_back(row);
        }
        s.median_walltime = median(times);
        s.median_rel_err = median(errs);
        s.failure_rate = static_cast<double>(failures) / static_cast<double>(total);
        table.summary.push_back(s);
    }
    return table;
}

}  // namespace weakid
