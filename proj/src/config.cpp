#include "weakid/config.hpp"

#include "weakid/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace weakid {

const std::vector<std::pair<std::string, std::string>>& Settings::schema() {
    static const std::vector<std::pair<std::string, std::string>> s = {
        {"model.name", "blood_diffusion"},
        {"model.params", "5, 1, 6"},
        {"model.y0", "20, 0"},
        {"grid.t0", "0"},
        {"grid.tM", "5"},
        {"grid.points", "400"},
        {"weakform.variant", ""},
        {"weakform.family", "polynomial"},
        {"weakform.radius", "0.52"},
        {"weakform.degree", "12"},
        {"weakform.eta", "9"},
        {"weakform.K", "15"},
        {"weakform.quadrature", "trapezoid"},
        {"integrator.rtol", "1e-10"},
        {"integrator.atol", "1e-10"},
        {"noise.kind", "additive"},
        {"noise.lognormal_scaling", "log_rms"},
        {"noise.lognormal_covariance", "linear"},
        {"noise.sigma_known", "true"},
        {"wendy.max_iter", "10"},
        {"wendy.tol", "1e-6"},
        {"wendy.level", "0.95"},
        {"wendy.covariance", "sandwich"},
        {"sweep.e_grid", "0:0.2:0.01"},
        {"sweep.q_grid", "0.01:1:0.01"},
        {"sweep.D", "1000"},
        {"sweep.seed", "1"},
        {"sweep.estimator", "wendy"},
        {"sweep.threads", "auto"},
        {"sweep.keep_estimates", "false"},
        {"sweep.compare_families", "false"},
        {"families.bump_radius", "0.6"},
        {"families.bump_eta", "9"},
        {"families.hartley_radius", "0.8"},
        {"oe.max_iter", "200"},
        {"oe.fd_step", "1e-6"},
        {"oe.init_spread", "0.5"},
        {"oe.rtol", "1e-10"},
        {"oe.atol", "1e-10"},
        {"oe.max_evaluations", "0"},
        {"oe.space", "mechanistic"},
        {"simulate.e", "0.05"},
        {"simulate.replicate", "0"},
        {"estimate.data", ""},
        {"param_scan.w1", "30"},
        {"param_scan.w2", "1:9:1"},
        {"param_scan.w3", "10:20:1"},
        {"param_scan.e_grid", "0.01, 0.05, 0.1, 0.2"},
        {"param_scan.D", "200"},
        {"hyperparam_scan.family", "polynomial"},
        {"hyperparam_scan.degrees", "6:18:2"},
        {"hyperparam_scan.radii", "0.52"},
        {"hyperparam_scan.e", "0.1"},
        {"hyperparam_scan.D", "200"},
        {"baseline.unknowns", ""},
        {"baseline.e", "0.1"},
        {"baseline.points", "40"},
        {"baseline.profile_points", "41"},
        {"baseline.profile_span", "1.0"},
        {"bench.e_grid", "0.05"},
        {"bench.n", "50"},
        {"output.walltime", "false"},
    };
    return s;
}

Settings::Settings() {
    for (const auto& [k, v] : schema()) values_[k] = v;
}

void Settings::set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second = value;
}

void Settings::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

namespace {

Settings from_ptree(const boost::property_tree::ptree& pt) {
    Settings s;
    for (const auto& [section, body] : pt) {
        if (body.empty()) throw ConfigError("configuration key '" + section + "' is outside any section");
        for (const auto& [key, value] : body) s.set(section + "." + key, value.get_value<std::string>());
    }
    return s;
}

}  // namespace

Settings Settings::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

Settings Settings::from_string(const std::string& text) {
    boost::property_tree::ptree pt;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_ptree(pt);
}

const std::string& Settings::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
    return it->second;
}

double Settings::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
    }
}

long long Settings::get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
    }
}

bool Settings::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
        if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
            throw std::invalid_argument(text);
        const auto n = static_cast<long long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
        // Snap to 12 significant digits so 0:1:0.1 yields 0.3 rather than 0.30000000000000004.
        char buf[32];
        for (long long i = 0; i <= n; ++i) {
            std::snprintf(buf, sizeof buf, "%.12g", parts[0] + static_cast<double>(i) * parts[2]);
            out.push_back(std::stod(buf));
        }
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t pos = 0;
        const double d = std::stod(tok, &pos);
        if (tok.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(tok);
        out.push_back(d);
    }
    return out;
}

std::vector<double> Settings::get_list(const std::string& key) const {
    try {
        return parse_list(get(key));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a list 'a, b, c' or a range 'start:stop:step'");
    }
}

std::vector<int> Settings::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const double d : get_list(key)) {
        if (d != std::round(d)) throw ConfigError("key '" + key + "' expects integers");
        out.push_back(static_cast<int>(std::lround(d)));
    }
    return out;
}

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <class T>
T choose(const Settings& s, const std::string& key, std::initializer_list<std::pair<const char*, T>> options) {
    const std::string& v = s.get(key);
    std::string names;
    for (const auto& [name, value] : options) {
        if (v == name) return value;
        names += (names.empty() ? "" : ", ") + std::string(name);
    }
    throw ConfigError("key '" + key + "' must be one of: " + names + " (got '" + v + "')");
}

}  // namespace

Experiment experiment_from(const Settings& s) {
    Experiment ex;
    ex.model = choose<ModelKind>(s, "model.name",
                                 {{"blood_diffusion", ModelKind::BloodDiffusion}, {"sir", ModelKind::Sir}});
    ex.params = to_vector(s.get_list("model.params"));
    ex.y0 = to_vector(s.get_list("model.y0"));
    const long long points = s.get_int("grid.points");
    if (points < 2) throw ConfigError("key 'grid.points' must be at least 2");
    ex.grid = TimeGrid(s.get_double("grid.t0"), s.get_double("grid.tM"), static_cast<std::size_t>(points));
    if (s.is_set("weakform.variant")) {
        ex.variant = choose<WeakVariant>(s, "weakform.variant",
                                         {{"blood_io", WeakVariant::BloodDiffusionIO},
                                          {"sir_io", WeakVariant::SirIO},
                                          {"sir_io_alt", WeakVariant::SirIOAlt}});
    } else {
        ex.variant = ex.model == ModelKind::BloodDiffusion ? WeakVariant::BloodDiffusionIO : WeakVariant::SirIO;
    }
    ex.observed = ex.model == ModelKind::BloodDiffusion ? 0 : 1;
    TestFunctionSpec tf;
    tf.family = choose<TestFunctionFamily>(s, "weakform.family",
                                           {{"polynomial", TestFunctionFamily::Polynomial},
                                            {"bump", TestFunctionFamily::CInfBump},
                                            {"hartley", TestFunctionFamily::Hartley3}});
    tf.radius = s.get_double("weakform.radius");
    tf.degree = static_cast<int>(s.get_int("weakform.degree"));
    tf.eta = s.get_double("weakform.eta");
    ex.test_function = tf;
    ex.K = static_cast<Eigen::Index>(s.get_int("weakform.K"));
    ex.quadrature = choose<QuadratureRule>(s, "weakform.quadrature",
                                           {{"trapezoid", QuadratureRule::Trapezoid},
                                            {"simpson", QuadratureRule::Simpson}});
    ex.rtol = s.get_double("integrator.rtol");
    ex.atol = s.get_double("integrator.atol");
    validate(ex);
    return ex;
}

SweepConfig sweep_config_from(const Settings& s) {
    SweepConfig c;
    c.experiment = experiment_from(s);
    c.e_grid = s.get_list("sweep.e_grid");
    c.q_grid = s.get_list("sweep.q_grid");
    const long long D = s.get_int("sweep.D");
    if (D < 1) throw ConfigError("key 'sweep.D' must be at least 1");
    c.D = static_cast<std::size_t>(D);
    c.kind = choose<NoiseKind>(s, "noise.kind",
                               {{"additive", NoiseKind::AdditiveGaussian},
                                {"lognormal", NoiseKind::MultiplicativeLognormal}});
    c.lognormal_scaling = choose<LognormalScaling>(
        s, "noise.lognormal_scaling", {{"log_rms", LognormalScaling::LogRms}, {"plain", LognormalScaling::Plain}});
    c.lognormal_covariance = choose<LognormalCovariance>(
        s, "noise.lognormal_covariance",
        {{"linear", LognormalCovariance::Linear}, {"quadratic", LognormalCovariance::Quadratic}});
    c.sigma_known = s.get_bool("noise.sigma_known");
    const long long seed = s.get_int("sweep.seed");
    if (seed < 0) throw ConfigError("key 'sweep.seed' must be nonnegative");
    c.master_seed = static_cast<std::uint64_t>(seed);
    c.estimator = choose<Estimator>(s, "sweep.estimator",
                                    {{"wendy", Estimator::Wendy}, {"oe", Estimator::OutputError}});
    c.irls.max_iter = static_cast<int>(s.get_int("wendy.max_iter"));
    c.irls.tol = s.get_double("wendy.tol");
    c.irls.level = s.get_double("wendy.level");
    if (!(c.irls.level > 0.0 && c.irls.level < 1.0)) throw ConfigError("key 'wendy.level' must be in (0, 1)");
    if (c.irls.max_iter < 1) throw ConfigError("key 'wendy.max_iter' must be at least 1");
    c.irls.covariance = choose<CovarianceForm>(s, "wendy.covariance",
                                               {{"sandwich", CovarianceForm::Sandwich}, {"gls", CovarianceForm::Gls}});
    c.oe.max_iter = static_cast<int>(s.get_int("oe.max_iter"));
    c.oe.fd_step = s.get_double("oe.fd_step");
    c.oe.init_spread = s.get_double("oe.init_spread");
    c.oe.rtol = s.get_double("oe.rtol");
    c.oe.atol = s.get_double("oe.atol");
    c.oe.max_evaluations = static_cast<int>(s.get_int("oe.max_evaluations"));
    c.oe.space = choose<OeSpace>(s, "oe.space",
                                 {{"mechanistic", OeSpace::Mechanistic}, {"unknowns", OeSpace::Unknowns}});
    const std::string& threads = s.get("sweep.threads");
    if (threads == "auto") {
        c.threads = 0;
    } else {
        const long long t = s.get_int("sweep.threads");
        if (t < 1) throw ConfigError("key 'sweep.threads' must be 'auto' or a positive integer");
        c.threads = static_cast<unsigned>(t);
    }
    c.keep_estimates = s.get_bool("sweep.keep_estimates");
    validate(c);
    return c;
}

}  // namespace weakid
