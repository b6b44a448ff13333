// weakid: weak-form practical identifiability experiments from the command line.

#include "weakid/config.hpp"
#include "weakid/error.hpp"
#include "weakid/output.hpp"
#include "weakid/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace weakid;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct Run {
    std::string command;
    Settings settings;
    fs::path out;
    std::vector<std::string> outputs;

    void write(const std::string& name, const std::string& content) {
        write_file_atomic(out / name, content);
        outputs.push_back(name);
    }
    void plot(const std::string& name, const Table& t) {
        for (const auto& p : emit_plotdata(out / "plotdata", name, t))
            outputs.push_back(fs::relative(p, out).string());
    }
    bool walltime() const { return settings.get_bool("output.walltime"); }
};

json vec_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json level_json(const SweepResult& r) {
    json levels = json::array();
    for (const auto& l : r.levels) {
        json params = json::object();
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            const auto& p = l.params[i];
            params[r.names[i]] = {{"mse", p.mse}, {"rel_err", p.rel_err}, {"coverage", p.coverage},
                                  {"mean", p.mean}, {"median_ci_width", p.median_ci_width}};
        }
        levels.push_back({{"e", l.e}, {"sigma", l.sigma}, {"rel_err", l.rel_err_norm},
                          {"median_rel_err", l.median_rel_err_norm}, {"n_converged", l.n_converged},
                          {"n_failed", l.n_failed}, {"params", params}});
    }
    return levels;
}

ObservationSet draw_observations(const Run& run, const Experiment& ex, const Eigen::VectorXd& truth) {
    const SweepConfig cfg = sweep_config_from(run.settings);
    const auto rep = run.settings.get_int("simulate.replicate");
    if (rep < 0) throw ConfigError("key 'simulate.replicate' must be nonnegative");
    return corrupt(truth, ex.grid, run.settings.get_double("simulate.e"), cfg.kind,
                   replicate_seed(cfg.master_seed, 0, static_cast<std::uint64_t>(rep)), cfg.lognormal_scaling);
}

std::vector<std::string> state_names(const Experiment& ex) {
    if (ex.model == ModelKind::BloodDiffusion) return {"x1", "x2"};
    return {"S", "I", "R"};
}

void cmd_simulate(Run& run) {
    const Experiment ex = experiment_from(run.settings);
    const Trajectory tr = simulate(ex);
    std::vector<std::string> header{"t"};
    for (const auto& n : state_names(ex)) header.push_back(n);
    Table traj(header);
    for (std::size_t m = 0; m < ex.grid.size(); ++m) {
        std::vector<std::string> row{format_number(ex.grid[m])};
        for (Eigen::Index j = 0; j < tr.states.cols(); ++j)
            row.push_back(format_number(tr.states(static_cast<Eigen::Index>(m), j)));
        traj.add(row);
    }
    run.write("trajectory.csv", traj.csv());

    const ObservationSet obs = draw_observations(run, ex, tr.component(ex.observed));
    Table t({"t", "truth", "y"});
    for (std::size_t m = 0; m < ex.grid.size(); ++m) {
        const auto i = static_cast<Eigen::Index>(m);
        t.add({format_number(ex.grid[m]), format_number(obs.truth[i]), format_number(obs.values[i])});
    }
    run.write("observations.csv", t.csv());
    std::cout << "rms=" << format_number(rms(obs.truth)) << " sigma=" << format_number(obs.sigma)
              << " seed=" << obs.seed << "\n";
}

// Reads a two-column CSV (t, y) with a header row; the times must be uniform.
std::pair<TimeGrid, Eigen::VectorXd> read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file '" + path + "'");
    std::string line;
    std::getline(in, line);
    std::vector<double> t, y;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ','))
            throw ConfigError("data file '" + path + "' needs two columns t,y");
        try {
            t.push_back(std::stod(a));
            y.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ConfigError("data file '" + path + "' has a non-numeric entry: " + line);
        }
    }
    if (t.size() < 7) throw ConfigError("data file '" + path + "' needs at least 7 rows");
    TimeGrid grid(t.front(), t.back(), t.size());
    const double tol = 1e-8 * (t.back() - t.front());
    for (std::size_t m = 0; m < t.size(); ++m)
        if (std::abs(grid[m] - t[m]) > tol) throw ConfigError("data file times are not uniformly spaced");
    return {grid, Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()))};
}

void cmd_estimate(Run& run) {
    SweepConfig cfg = sweep_config_from(run.settings);
    Experiment ex = cfg.experiment;
    Eigen::VectorXd data;
    bool external = run.settings.is_set("estimate.data");
    NoiseSpec noise{cfg.kind, 0.0, cfg.sigma_known, cfg.lognormal_covariance};
    json info;
    if (external) {
        auto [grid, y] = read_series(run.settings.get("estimate.data"));
        ex.grid = grid;
        data = y;
        noise.known = false;
        info["data"] = run.settings.get("estimate.data");
    } else {
        const ObservationSet obs = draw_observations(run, ex, observed_truth(ex));
        data = obs.values;
        noise.sigma = obs.sigma;
        info["e"] = obs.e;
        info["seed"] = obs.seed;
    }
    const auto model = make_weak_model(ex);
    const TestFunctionBasis basis = make_basis(ex);
    const Estimate est = irls_estimate(*model, data, basis, noise, cfg.irls);
    const auto names = model->unknown_names();
    const Eigen::VectorXd w = true_unknowns(ex);

    Table t({"param", "true", "estimate", "ci_lo", "ci_hi", "sd"});
    json params = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double sd = std::sqrt(std::max(est.S_w(ii, ii), 0.0));
        t.add({names[i], external ? "NA" : format_number(w[ii]), format_number(est.w_hat[ii]),
               format_number(est.ci[i].lo), format_number(est.ci[i].hi), format_number(sd)});
        params[names[i]] = {{"estimate", est.w_hat[ii]}, {"ci", {est.ci[i].lo, est.ci[i].hi}}, {"sd", sd}};
        std::cout << names[i] << " = " << format_number(est.w_hat[ii]) << "  [" << format_number(est.ci[i].lo)
                  << ", " << format_number(est.ci[i].hi) << "]\n";
    }
    run.write("estimate.csv", t.csv());
    info["params"] = params;
    info["sigma_used"] = est.sigma_used;
    info["iterations"] = est.iterations;
    info["converged"] = est.converged;
    json cov = json::array();
    for (Eigen::Index i = 0; i < est.S_w.rows(); ++i) cov.push_back(vec_json(est.S_w.row(i).transpose()));
    info["S_w"] = cov;
    run.write("estimate.json", info.dump(2) + "\n");
}

void write_maps(Run& run, const SweepResult& res, const SweepConfig& cfg, bool extras) {
    const EqMap map = eq_map(res, res.true_w, cfg.q_grid);
    run.write("eqmap.csv", grid_table(map.model, map.e_grid, map.q_grid).csv());
    run.plot("eqmap", grid_table(map.model, map.e_grid, map.q_grid));
    for (std::size_t i = 0; i < map.names.size(); ++i) {
        const Table g = grid_table(map.per_param[i], map.e_grid, map.q_grid);
        run.write("eqmap_" + map.names[i] + ".csv", g.csv());
        run.plot("eqmap_" + map.names[i], g);
    }
    if (!extras) return;
    const EqMap strict = eq_map(res, res.true_w, cfg.q_grid, EqMode::Strict);
    run.write("eqmap_strict.csv", grid_table(strict.model, strict.e_grid, strict.q_grid).csv());
    const EqMap post = eq_map_a_posteriori(res, cfg.q_grid);
    run.write("eqmap_aposteriori.csv", grid_table(post.model, post.e_grid, post.q_grid).csv());
    std::vector<std::string> header{"e", "model"};
    for (const auto& n : map.names) header.push_back(n);
    Table mq(header);
    for (std::size_t ei = 0; ei < map.e_grid.size(); ++ei) {
        auto cell = [&](int p) {
            const auto q = min_q(map, ei, p);
            return q ? format_number(*q) : std::string("NA");
        };
        std::vector<std::string> row{format_number(map.e_grid[ei]), cell(-1)};
        for (std::size_t i = 0; i < map.names.size(); ++i) row.push_back(cell(static_cast<int>(i)));
        mq.add(row);
    }
    run.write("min_q.csv", mq.csv());
}

void cmd_sweep(Run& run, bool maps_only) {
    const SweepConfig cfg = sweep_config_from(run.settings);
    const SweepResult res = run_sweep(cfg);
    write_maps(run, res, cfg, maps_only);
    if (!maps_only) {
        run.write("sweep.csv", sweep_table(res, run.walltime()).csv());
        run.plot("relerr", relerr_table(res));
        run.plot("coverage", coverage_table(res));
        if (cfg.keep_estimates) run.write("replicates.csv", replicate_table(res).csv());
    }
    json summary{{"names", res.names}, {"true_w", vec_json(res.true_w)}, {"D", res.D},
                 {"estimator", to_string(cfg.estimator)}, {"noise", to_string(cfg.kind)},
                 {"levels", level_json(res)}};
    run.write(maps_only ? "eqmap_summary.json" : "summary.json", summary.dump(2) + "\n");

    if (!maps_only && run.settings.get_bool("sweep.compare_families")) {
        Table all({"family", "e", "rel_err"});
        const std::vector<std::pair<TestFunctionFamily, TestFunctionSpec>> fams = {
            {TestFunctionFamily::Polynomial, cfg.experiment.test_function},
            {TestFunctionFamily::CInfBump, TestFunctionSpec::bump(run.settings.get_double("families.bump_radius"),
                                                                  run.settings.get_double("families.bump_eta"))},
            {TestFunctionFamily::Hartley3, TestFunctionSpec::hartley(run.settings.get_double("families.hartley_radius"))}};
        for (const auto& [fam, spec] : fams) {
            SweepConfig c = cfg;
            c.experiment.test_function = spec;
            c.experiment.test_function.family = fam;
            const SweepResult r = run_sweep(c);
            run.plot("relerr_" + to_string(fam), relerr_table(r));
            for (const auto& l : r.levels) all.add({to_string(fam), format_number(l.e), format_number(l.rel_err_norm)});
        }
        run.write("relerr_families.csv", all.csv());
    }
    for (const auto& l : res.levels)
        std::cout << "e=" << format_number(l.e) << " rel_err=" << format_number(l.rel_err_norm)
                  << " converged=" << l.n_converged << "/" << res.D << "\n";
}

void cmd_param_scan(Run& run) {
    SweepConfig cfg = sweep_config_from(run.settings);
    if (cfg.experiment.model != ModelKind::BloodDiffusion)
        throw ConfigError("param-scan varies (w2, w3) and needs model.name = blood_diffusion");
    const double w1 = run.settings.get_double("param_scan.w1");
    const auto w2 = run.settings.get_list("param_scan.w2");
    const auto w3 = run.settings.get_list("param_scan.w3");
    const auto e_grid = run.settings.get_list("param_scan.e_grid");
    const auto D = run.settings.get_int("param_scan.D");
    if (D < 1) throw ConfigError("key 'param_scan.D' must be at least 1");
    std::vector<Eigen::VectorXd> points;
    for (const double a : w2)
        for (const double b : w3) points.push_back(Eigen::Vector3d(w1, a, b));
    const MinQMap m = min_q_map(cfg, points, e_grid, static_cast<std::size_t>(D), cfg.master_seed);
    for (std::size_t ei = 0; ei < e_grid.size(); ++ei) {
        const std::string name = "minq_e" + format_number(e_grid[ei]);
        const Table t = minq_table(m, ei, w2, w3);
        run.write(name + ".csv", t.csv());
        run.plot(name, t);
    }
}

void cmd_hyperparam_scan(Run& run) {
    SweepConfig cfg = sweep_config_from(run.settings);
    cfg.e_grid = {run.settings.get_double("hyperparam_scan.e")};
    const auto D = run.settings.get_int("hyperparam_scan.D");
    if (D < 1) throw ConfigError("key 'hyperparam_scan.D' must be at least 1");
    cfg.D = static_cast<std::size_t>(D);
    const auto family = family_from_string(run.settings.get("hyperparam_scan.family"));
    const HyperScan scan = hyperparam_scan(cfg, family, run.settings.get_int_list("hyperparam_scan.degrees"),
                                           run.settings.get_list("hyperparam_scan.radii"));
    const Table t = hyperscan_table(scan, unknown_names(cfg.experiment));
    run.write("hyperscan.csv", t.csv());
    run.plot("hyperscan", t);
    for (const auto& r : scan.rows)
        if (!r.admissible) std::cerr << "warning: skipped degree " << r.degree << " radius " << r.radius << ": " << r.note << "\n";
    json s{{"family", to_string(family)}};
    if (scan.best) {
        const auto& b = scan.rows[*scan.best];
        s["best"] = {{"degree", b.degree}, {"radius", b.radius}, {"rel_err", b.rel_err_norm}};
        std::cout << "best: degree=" << b.degree << " radius=" << format_number(b.radius)
                  << " rel_err=" << format_number(b.rel_err_norm) << "\n";
    }
    run.write("hyperscan_summary.json", s.dump(2) + "\n");
}

void cmd_baseline(Run& run) {
    SweepConfig cfg = sweep_config_from(run.settings);
    Experiment ex = cfg.experiment;
    const auto points = run.settings.get_int("baseline.points");
    if (points < 7) throw ConfigError("key 'baseline.points' must be at least 7");
    ex.grid = TimeGrid(ex.grid.t0(), ex.grid.tM(), static_cast<std::size_t>(points));
    if (run.settings.is_set("baseline.unknowns"))
        ex = with_unknowns(ex, Eigen::Map<const Eigen::VectorXd>(
                                   run.settings.get_list("baseline.unknowns").data(),
                                   static_cast<Eigen::Index>(run.settings.get_list("baseline.unknowns").size())));
    validate(ex);
    const Eigen::VectorXd truth = observed_truth(ex);
    const ObservationSet obs = corrupt(truth, ex.grid, run.settings.get_double("baseline.e"), cfg.kind,
                                       replicate_seed(cfg.master_seed, 0, 0), cfg.lognormal_scaling);
    OeOptions opt = cfg.oe;
    opt.space = OeSpace::Unknowns;
    const OeProblem problem = oe_problem(ex, opt.space);
    const Eigen::VectorXd init = oe_truth(ex, opt.space);
    const auto n = run.settings.get_int("baseline.profile_points");
    const double span = run.settings.get_double("baseline.profile_span");
    if (n < 3 || !(span > 0.0)) throw ConfigError("profile needs at least 3 points and a positive span");

    const OeFitResult fit = oe_fit(problem, obs, init, opt);
    json out{{"names", problem.names}, {"truth", vec_json(init)}, {"fit", vec_json(fit.params)},
             {"objective", fit.objective}, {"converged", fit.converged}, {"iterations", fit.iterations}};
    json profiles = json::object();
    for (Eigen::Index i = 0; i < init.size(); ++i) {
        const double c = fit.params[i];
        const Eigen::VectorXd grid =
            Eigen::VectorXd::LinSpaced(n, c - span * std::abs(c), c + span * std::abs(c));
        const ProfileCurve pc = profile_likelihood(problem, obs, i, grid, init, opt);
        const std::string& name = problem.names[static_cast<std::size_t>(i)];
        run.write("profile_" + name + ".csv", profile_table(pc).csv());
        run.plot("profile_" + name, profile_table(pc));
        profiles[name] = {{"threshold", pc.threshold},
                          {"min_objective", pc.min_objective},
                          {"ci_lo", pc.ci_lo ? json(*pc.ci_lo) : json(nullptr)},
                          {"ci_hi", pc.ci_hi ? json(*pc.ci_hi) : json(nullptr)},
                          {"bounded", pc.bounded()}};
        std::cout << name << ": CI [" << (pc.ci_lo ? format_number(*pc.ci_lo) : "-") << ", "
                  << (pc.ci_hi ? format_number(*pc.ci_hi) : "-") << "]\n";
    }
    out["profiles"] = profiles;
    run.write("baseline.json", out.dump(2) + "\n");
}

void cmd_rank_check(Run& run) {
    const Experiment ex = experiment_from(run.settings);
    const TestFunctionBasis basis = make_basis(ex);
    const BasisRanks r = rank_diagnostics(basis);
    const WeakLinearSystem sys = make_weak_model(ex)->assemble(observed_truth(ex), basis);
    const Eigen::Index rg = numerical_rank(sys.G);
    std::cout << "rank(Phi0)=" << r.rank0 << " rank(Phi1)=" << r.rank1 << " rank(Phi2)=" << r.rank2
              << " rank(G)=" << rg << " K=" << basis.size() << " p=" << sys.G.cols()
              << " cond(G)=" << format_number(sys.condition_number) << "\n";
    json j{{"K", basis.size()}, {"rank_phi0", r.rank0}, {"rank_phi1", r.rank1}, {"rank_phi2", r.rank2},
           {"rank_G", rg}, {"unknowns", sys.G.cols()}, {"condition_number", sys.condition_number}};
    run.write("ranks.json", j.dump(2) + "\n");
}

void cmd_bench(Run& run) {
    SweepConfig cfg = sweep_config_from(run.settings);
    cfg.e_grid = run.settings.get_list("bench.e_grid");
    const auto n = run.settings.get_int("bench.n");
    if (n < 1) throw ConfigError("key 'bench.n' must be at least 1");
    validate(cfg);
    const TimingTable t = timing_compare(cfg, static_cast<std::size_t>(n));
    run.write("timing_summary.csv", timing_summary_table(t, true).csv());
    run.write("timing_scatter.csv", timing_scatter_table(t, true).csv());
    run.plot("timing_scatter", timing_scatter_table(t, true));
    for (const auto& s : t.summary)
        std::cout << s.estimator << ": median_walltime_s=" << format_number(s.median_walltime)
                  << " median_rel_err=" << format_number(s.median_rel_err)
                  << " failure_rate=" << format_number(s.failure_rate) << "\n";
}

void write_manifest(Run& run, const std::string& started, double elapsed) {
    json cfg = json::object();
    for (const auto& [k, v] : run.settings.values()) cfg[k] = v;
    json m{{"command", run.command},
           {"version", version},
           {"compiler", __VERSION__},
           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION)},
           {"seed", run.settings.get("sweep.seed")},
           {"threads", run.settings.get("sweep.threads")},
           {"config", cfg},
           {"outputs", run.outputs},
           {"started_utc", started},
           {"finished_utc", utc_now()},
           {"elapsed_s", elapsed}};
    write_file_atomic(run.out / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak-form practical identifiability experiments"};
    std::string command, config_path, out = "out", seed, threads, estimator, noise, D, e_grid, q_grid;
    std::vector<std::string> sets;
    app.add_option("command", command, "simulate | estimate | sweep | eq-map | param-scan | hyperparam-scan | "
                                       "baseline | rank-check | bench")
        ->required()
        ->check(CLI::IsMember({"simulate", "estimate", "sweep", "eq-map", "param-scan", "hyperparam-scan",
                               "baseline", "rank-check", "bench"}));
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker threads or 'auto'");
    app.add_option("--set", sets, "override section.key=value (repeatable)");
    app.add_option("--estimator", estimator, "wendy | oe");
    app.add_option("--noise", noise, "additive | lognormal");
    app.add_option("--D", D, "replicates per noise level");
    app.add_option("--e-grid", e_grid, "noise ratios: 'a, b, c' or 'start:stop:step'");
    app.add_option("--q-grid", q_grid, "estimator error ratios");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    try {
        Run run{command, config_path.empty() ? Settings() : Settings::from_file(config_path), out, {}};
        for (const auto& s : sets) run.settings.apply_override(s);
        const std::pair<const std::string*, const char*> flags[] = {
            {&seed, "sweep.seed"},     {&threads, "sweep.threads"}, {&estimator, "sweep.estimator"},
            {&noise, "noise.kind"},    {&D, "sweep.D"},             {&e_grid, "sweep.e_grid"},
            {&q_grid, "sweep.q_grid"}};
        for (const auto& [value, key] : flags)
            if (!value->empty()) run.settings.set(key, *value);
        (void)sweep_config_from(run.settings);  // validate everything before touching the disk

        std::error_code ec;
        fs::create_directories(run.out / "plotdata", ec);
        if (ec) throw Error("cannot create output directory " + run.out.string() + ": " + ec.message());

        if (command == "simulate") cmd_simulate(run);
        else if (command == "estimate") cmd_estimate(run);
        else if (command == "sweep") cmd_sweep(run, false);
        else if (command == "eq-map") cmd_sweep(run, true);
        else if (command == "param-scan") cmd_param_scan(run);
        else if (command == "hyperparam-scan") cmd_hyperparam_scan(run);
        else if (command == "baseline") cmd_baseline(run);
        else if (command == "rank-check") cmd_rank_check(run);
        else if (command == "bench") cmd_bench(run);

        write_manifest(run, started,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
