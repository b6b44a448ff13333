#include "weakid/identifiability.hpp"

#include "weakid/error.hpp"
#include "weakid/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace weakid {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
    if (v.empty()) return nan;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

void require_increasing(const std::vector<double>& g, const char* what) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] >= 0.0) || !std::isfinite(g[i]))
            throw ConfigError(std::string(what) + " values must be finite and nonnegative");
        if (i > 0 && !(g[i] > g[i - 1]))
            throw ConfigError(std::string(what) + " must be strictly increasing");
    }
}

}  // namespace

std::string to_string(Estimator e) { return e == Estimator::Wendy ? "wendy" : "oe"; }

Estimator estimator_from_string(const std::string& s) {
    if (s == "wendy") return Estimator::Wendy;
    if (s == "oe") return Estimator::OutputError;
    throw ConfigError("unknown estimator '" + s + "'");
}

void validate(const SweepConfig& c) {
    validate(c.experiment);
    if (c.e_grid.empty()) throw ConfigError("e_grid is empty");
    require_increasing(c.e_grid, "e_grid");
    require_increasing(c.q_grid, "q_grid");
    if (c.D < 1) throw ConfigError("D must be at least 1");
}

ReplicateRecord run_replicate(const SweepConfig& config, const Eigen::VectorXd& truth,
                              const TestFunctionBasis& basis, std::size_t e_index,
                              std::size_t replicate) {
    ReplicateRecord rec;
    rec.e_index = e_index;
    rec.replicate = replicate;
    rec.seed = replicate_seed(config.master_seed, e_index, replicate);
    const auto start = std::chrono::steady_clock::now();
    const Experiment& ex = config.experiment;
    try {
        const ObservationSet obs = corrupt(truth, ex.grid, config.e_grid[e_index], config.kind,
                                           rec.seed, config.lognormal_scaling);
        rec.sigma = obs.sigma;
        if (config.estimator == Estimator::Wendy) {
            const auto model = make_weak_model(ex);
            const NoiseSpec noise{config.kind, obs.sigma, config.sigma_known,
                                  config.lognormal_covariance};
            const Estimate est = irls_estimate(*model, obs.values, basis, noise, config.irls);
            rec.w_hat = est.w_hat;
            rec.ci = est.ci;
            rec.converged = est.converged;
        } else {
            const OeProblem problem = oe_problem(ex, config.oe.space);
            Eigen::VectorXd init = oe_truth(ex, config.oe.space);
            std::mt19937_64 rng(replicate_seed(rec.seed, 0x0e, 0));
            std::normal_distribution<double> normal(0.0, config.oe.init_spread);
            for (Eigen::Index i = 0; i < init.size(); ++i) init[i] *= std::exp(normal(rng));
            const OeFitResult fit = oe_fit(problem, obs, init, config.oe);
            rec.w_hat = oe_to_unknowns(ex, config.oe.space, fit.params);
            rec.converged = fit.converged && rec.w_hat.allFinite();
        }
        rec.ok = rec.w_hat.allFinite();
        if (!rec.ok) rec.error = "non-finite estimate";
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& err) {
        rec.ok = false;
        rec.converged = false;
        rec.error = err.what();
    }
    rec.walltime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

SweepResult aggregate(const SweepConfig& config, const std::vector<ReplicateRecord>& records) {
    SweepResult res;
    res.names = unknown_names(config.experiment);
    res.true_w = true_unknowns(config.experiment);
    res.D = config.D;
    const auto p = static_cast<std::size_t>(res.true_w.size());
    const Eigen::VectorXd truth = observed_truth(config.experiment);
    for (std::size_t ei = 0; ei < config.e_grid.size(); ++ei) {
        LevelResult lvl;
        lvl.e = config.e_grid[ei];
        lvl.sigma = noise_sigma(truth, lvl.e, config.kind, config.lognormal_scaling);
        lvl.params.assign(p, ParamStats{});
        std::vector<double> times, norm_errs;
        std::vector<std::vector<double>> widths(p);
        std::vector<std::size_t> with_ci(p, 0), covered(p, 0);
        for (std::size_t d = 0; d < config.D; ++d) {
            const ReplicateRecord& r = records[ei * config.D + d];
            times.push_back(r.walltime);
            if (!(r.ok && r.converged)) continue;
            ++lvl.n_converged;
            const double ne = (r.w_hat - res.true_w).norm() / res.true_w.norm();
            lvl.rel_err_norm += ne;
            norm_errs.push_back(ne);
            for (std::size_t i = 0; i < p; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                const double diff = r.w_hat[ii] - res.true_w[ii];
                lvl.params[i].mse += diff * diff;
                lvl.params[i].rel_err += std::abs(diff) / std::abs(res.true_w[ii]);
                lvl.params[i].mean += r.w_hat[ii];
                if (r.ci.size() == p) {
                    ++with_ci[i];
                    // Zero-noise intervals are degenerate and counted as covering.
                    if (r.sigma == 0.0 || r.ci[i].contains(res.true_w[ii])) ++covered[i];
                    widths[i].push_back(r.ci[i].hi - r.ci[i].lo);
                }
            }
        }
        lvl.n_failed = config.D - lvl.n_converged;
        const double n = static_cast<double>(lvl.n_converged);
        for (std::size_t i = 0; i < p; ++i) {
            auto& s = lvl.params[i];
            if (lvl.n_converged == 0) {
                s.mse = s.rel_err = s.mean = nan;
            } else {
                s.mse /= n;
                s.rel_err /= n;
                s.mean /= n;
            }
            s.coverage = with_ci[i] ? static_cast<double>(covered[i]) / static_cast<double>(with_ci[i]) : nan;
            s.median_ci_width = median(widths[i]);
        }
        lvl.rel_err_norm = lvl.n_converged ? lvl.rel_err_norm / n : nan;
        lvl.median_rel_err_norm = median(norm_errs);
        lvl.median_walltime = median(times);
        res.levels.push_back(std::move(lvl));
    }
    if (config.keep_estimates) res.replicates = records;
    return res;
}

SweepResult run_sweep(const SweepConfig& config) {
    validate(config);
    const Eigen::VectorXd truth = observed_truth(config.experiment);
    const TestFunctionBasis basis = make_basis(config.experiment);
    const std::size_t total = config.e_grid.size() * config.D;
    std::vector<ReplicateRecord> records(total);
    parallel_for(total, config.threads, [&](std::size_t i) {
        records[i] = run_replicate(config, truth, basis, i / config.D, i % config.D);
    });
    return aggregate(config, records);
}

namespace {

EqMap build_map(const SweepResult& result, const std::vector<Eigen::VectorXd>& refs,
                const std::vector<double>& q_grid, EqMode mode) {
    EqMap map;
    map.q_grid = q_grid;
    map.names = result.names;
    const auto ne = static_cast<Eigen::Index>(result.levels.size());
    const auto nq = static_cast<Eigen::Index>(q_grid.size());
    const std::size_t p = result.names.size();
    for (const auto& l : result.levels) map.e_grid.push_back(l.e);
    map.per_param.assign(p, BoolGrid::Constant(ne, nq, false));
    map.model = BoolGrid::Constant(ne, nq, true);
    for (Eigen::Index ei = 0; ei < ne; ++ei) {
        const LevelResult& lvl = result.levels[static_cast<std::size_t>(ei)];
        const bool usable = lvl.n_converged > 0 && (mode == EqMode::ConvergedOnly || lvl.n_failed == 0);
        for (std::size_t i = 0; i < p; ++i) {
            const double w = refs[static_cast<std::size_t>(ei)][static_cast<Eigen::Index>(i)];
            for (Eigen::Index qi = 0; qi < nq; ++qi) {
                const double tol = q_grid[static_cast<std::size_t>(qi)] * w;
                const bool ok = usable && lvl.params[i].mse < tol * tol;
                map.per_param[i](ei, qi) = ok;
                map.model(ei, qi) = map.model(ei, qi) && ok;
            }
        }
    }
    return map;
}

}  // namespace

EqMap eq_map(const SweepResult& result, const Eigen::VectorXd& true_w,
             const std::vector<double>& q_grid, EqMode mode) {
    if (static_cast<std::size_t>(true_w.size()) != result.names.size())
        throw ConfigError("eq_map: reference vector has the wrong length");
    for (Eigen::Index i = 0; i < true_w.size(); ++i)
        if (true_w[i] == 0.0)
            throw ConfigError("eq_map: parameter " + result.names[static_cast<std::size_t>(i)] +
                              " is zero, so a relative tolerance is undefined");
    require_increasing(q_grid, "q_grid");
    return build_map(result, std::vector<Eigen::VectorXd>(result.levels.size(), true_w), q_grid, mode);
}

EqMap eq_map_a_posteriori(const SweepResult& result, const std::vector<double>& q_grid, EqMode mode) {
    require_increasing(q_grid, "q_grid");
    std::vector<Eigen::VectorXd> refs;
    for (const auto& l : result.levels) {
        Eigen::VectorXd m(static_cast<Eigen::Index>(l.params.size()));
        for (std::size_t i = 0; i < l.params.size(); ++i) m[static_cast<Eigen::Index>(i)] = l.params[i].mean;
        refs.push_back(m);
    }
    return build_map(result, refs, q_grid, mode);
}

std::optional<double> min_q(const EqMap& map, std::size_t e_index, int param) {
    const BoolGrid& g = param < 0 ? map.model : map.per_param.at(static_cast<std::size_t>(param));
    const auto ei = static_cast<Eigen::Index>(e_index);
    for (Eigen::Index qi = 0; qi < g.cols(); ++qi)
        if (g(ei, qi)) return map.q_grid[static_cast<std::size_t>(qi)];
    return std::nullopt;
}

MinQMap min_q_map(const SweepConfig& base, const std::vector<Eigen::VectorXd>& param_grid,
                  const std::vector<double>& e_grid, std::size_t D, std::uint64_t seed) {
    MinQMap out;
    out.points = param_grid;
    out.e_grid = e_grid;
    for (const auto& w : param_grid) {
        SweepConfig cfg = base;
        cfg.e_grid = e_grid;
        cfg.D = D;
        cfg.master_seed = seed;
        std::vector<std::optional<double>> row(e_grid.size());
        bool admissible = true;
        try {
            cfg.experiment = with_unknowns(base.experiment, w);
            validate(cfg.experiment);
        } catch (const ConfigError&) {
            admissible = false;
        }
        if (admissible) {
            const SweepResult res = run_sweep(cfg);
            const EqMap map = eq_map(res, res.true_w, cfg.q_grid);
            for (std::size_t ei = 0; ei < e_grid.size(); ++ei) row[ei] = min_q(map, ei);
        }
        out.q.push_back(std::move(row));
    }
    return out;
}

HyperScan hyperparam_scan(const SweepConfig& base, TestFunctionFamily family,
                          const std::vector<int>& degrees, const std::vector<double>& radii) {
    HyperScan scan;
    scan.family = family;
    const std::vector<int> degs = family == TestFunctionFamily::Polynomial
                                      ? degrees
                                      : std::vector<int>{base.experiment.test_function.degree};
    for (const int deg : degs) {
        for (const double a : radii) {
            HyperRow row;
            row.degree = deg;
            row.radius = a;
            SweepConfig cfg = base;
            TestFunctionSpec spec = base.experiment.test_function;
            spec.family = family;
            spec.radius = a;
            spec.degree = deg;
            cfg.experiment.test_function = spec;
            try {
                (void)make_basis(cfg.experiment);
                row.admissible = true;
            } catch (const Error& err) {
                row.note = err.what();
            }
            if (row.admissible) {
                const SweepResult res = run_sweep(cfg);
                row.rel_err.assign(res.names.size(), 0.0);
                for (const auto& l : res.levels) {
                    row.rel_err_norm += l.rel_err_norm;
                    row.n_converged += l.n_converged;
                    for (std::size_t i = 0; i < res.names.size(); ++i) row.rel_err[i] += l.params[i].rel_err;
                }
                const double nl = static_cast<double>(res.levels.size());
                row.rel_err_norm /= nl;
                for (auto& v : row.rel_err) v /= nl;
                if (!scan.best || row.rel_err_norm < scan.rows[*scan.best].rel_err_norm)
                    scan.best = scan.rows.size();
            }
            scan.rows.push_back(std::move(row));
        }
    }
    return scan;
}

}  // namespace weakid
