#include "weakid/testfn.hpp"

#include "weakid/error.hpp"

#include <cmath>
#include <numbers>

namespace weakid {

std::string to_string(TestFunctionFamily f) {
    switch (f) {
        case TestFunctionFamily::CInfBump: return "bump";
        case TestFunctionFamily::Hartley3: return "hartley";
        case TestFunctionFamily::Polynomial: return "polynomial";
    }
    return "?";
}

TestFunctionFamily family_from_string(const std::string& s) {
    if (s == "bump" || s == "cinf") return TestFunctionFamily::CInfBump;
    if (s == "hartley") return TestFunctionFamily::Hartley3;
    if (s == "polynomial" || s == "poly") return TestFunctionFamily::Polynomial;
    throw ConfigError("unknown test-function family '" + s + "'");
}

TestFunctionSpec TestFunctionSpec::bump(double radius, double eta) {
    TestFunctionSpec s;
    s.family = TestFunctionFamily::CInfBump;
    s.radius = radius;
    s.eta = eta;
    return s;
}

TestFunctionSpec TestFunctionSpec::hartley(double radius) {
    TestFunctionSpec s;
    s.family = TestFunctionFamily::Hartley3;
    s.radius = radius;
    return s;
}

TestFunctionSpec TestFunctionSpec::polynomial(double radius, int degree) {
    TestFunctionSpec s;
    s.family = TestFunctionFamily::Polynomial;
    s.radius = radius;
    s.degree = degree;
    return s;
}

namespace {

// Unnormalized shape and its first two derivatives in u = s/a, |u| < 1.
void shape(const TestFunctionSpec& spec, double u, double out[3]) {
    using std::numbers::pi;
    switch (spec.family) {
        case TestFunctionFamily::CInfBump: {
            const double v = 1.0 - u * u;
            const double g1 = -2.0 * spec.eta * u / (v * v);
            const double g2 = -spec.eta * (2.0 + 6.0 * u * u) / (v * v * v);
            const double f = std::exp(-spec.eta / v);
            out[0] = f;
            out[1] = f * g1;
            out[2] = f * (g1 * g1 + g2);
            return;
        }
        case TestFunctionFamily::Hartley3: {
            // cas(x) = cos x + sin x; cas' = cos - sin; cas'' = -cas.
            static constexpr double coef[3] = {1.0, -3.0, 3.0};
            static constexpr double freq[3] = {6.0, 4.0, 2.0};
            out[0] = -1.0;
            out[1] = 0.0;
            out[2] = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double w = freq[j] * pi;
                const double c = std::cos(w * u), s = std::sin(w * u);
                out[0] += coef[j] * (c + s);
                out[1] += coef[j] * w * (c - s);
                out[2] -= coef[j] * w * w * (c + s);
            }
            return;
        }
        case TestFunctionFamily::Polynomial: {
            // (1+u)^p (1-u)^p = (1-u^2)^p
            const int p = spec.degree / 2;
            const double v = 1.0 - u * u;
            const double vp2 = p >= 2 ? std::pow(v, p - 2) : 0.0;
            out[0] = vp2 * v * v;
            out[1] = -2.0 * p * u * vp2 * v;
            out[2] = 4.0 * p * (p - 1) * u * u * vp2 - 2.0 * p * vp2 * v;
            return;
        }
    }
}

void validate(const TestFunctionSpec& spec) {
    if (!(spec.radius > 0.0) || !std::isfinite(spec.radius))
        throw ConfigError("test function radius must be positive");
    if (spec.family == TestFunctionFamily::Polynomial && (spec.degree < 4 || spec.degree % 2 != 0))
        throw ConfigError("polynomial test function degree must be even and >= 4");
    if (spec.family == TestFunctionFamily::CInfBump && !(spec.eta > 0.0))
        throw ConfigError("bump test function eta must be positive");
}

}  // namespace

TestFunctionSpec normalized(TestFunctionSpec spec) {
    validate(spec);
    // Composite Simpson on u in [-1, 1]; every family vanishes smoothly at the ends.
    constexpr int n = 20000;
    const double du = 2.0 / n;
    double acc = 0.0;
    double v[3] = {0.0, 0.0, 0.0};
    for (int i = 1; i < n; ++i) {
        shape(spec, -1.0 + i * du, v);
        acc += (i % 2 ? 4.0 : 2.0) * v[0] * v[0];
    }
    const double integral = spec.radius * acc * du / 3.0;
    spec.normalization = 1.0 / std::sqrt(integral);
    return spec;
}

double eval_testfn(const TestFunctionSpec& spec, double center, double t, int deriv_order) {
    if (deriv_order < 0 || deriv_order > 2) throw ConfigError("deriv_order must be 0, 1 or 2");
    const double C = spec.normalization > 0.0 ? spec.normalization : normalized(spec).normalization;
    const double u = (t - center) / spec.radius;
    if (!(std::abs(u) < 1.0)) return 0.0;
    double v[3] = {0.0, 0.0, 0.0};
    shape(spec, u, v);
    return C * v[deriv_order] / std::pow(spec.radius, deriv_order);
}

Eigen::VectorXd quadrature_weights(const TimeGrid& grid, QuadratureRule rule) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double h = grid.step();
    Eigen::VectorXd w(n);
    if (rule == QuadratureRule::Trapezoid) {
        w.setConstant(h);
        w[0] = w[n - 1] = 0.5 * h;
        return w;
    }
    if ((n - 1) % 2 != 0) throw ConfigError("Simpson quadrature needs an even number of intervals");
    for (Eigen::Index m = 0; m < n; ++m) w[m] = (m % 2 ? 4.0 : 2.0) * h / 3.0;
    w[0] = w[n - 1] = h / 3.0;
    return w;
}

TestFunctionBasis build_basis_at(const TestFunctionSpec& spec, const Eigen::VectorXd& centers,
                                 const TimeGrid& grid, QuadratureRule rule) {
    TestFunctionBasis basis;
    basis.spec = normalized(spec);
    const double a = basis.spec.radius;
    const double slack = 1e-12 * (grid.tM() - grid.t0());
    for (Eigen::Index k = 0; k < centers.size(); ++k) {
        if (centers[k] - a < grid.t0() - slack || centers[k] + a > grid.tM() + slack)
            throw DomainError("test-function support leaves the time window");
    }
    basis.centers = centers;
    basis.grid = grid;
    basis.weights = quadrature_weights(grid, rule);
    const Eigen::Index K = centers.size();
    const auto M1 = static_cast<Eigen::Index>(grid.size());
    basis.phi0.resize(K, M1);
    basis.phi1.resize(K, M1);
    basis.phi2.resize(K, M1);
    const Eigen::VectorXd t = grid.points();
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index m = 0; m < M1; ++m) {
            const double q = basis.weights[m];
            basis.phi0(k, m) = q * eval_testfn(basis.spec, centers[k], t[m], 0);
            basis.phi1(k, m) = q * eval_testfn(basis.spec, centers[k], t[m], 1);
            basis.phi2(k, m) = q * eval_testfn(basis.spec, centers[k], t[m], 2);
        }
    }
    return basis;
}

TestFunctionBasis build_basis(const TestFunctionSpec& spec, Eigen::Index K, const TimeGrid& grid,
                              QuadratureRule rule) {
    if (K < 1) throw ConfigError("number of test functions must be positive");
    validate(spec);
    const double a = spec.radius;
    const double lo = grid.t0() + a, hi = grid.tM() - a;
    if (lo > hi) throw DomainError("test-function radius too large: 2a exceeds the time window");
    Eigen::VectorXd centers(K);
    if (K == 1) {
        centers[0] = 0.5 * (lo + hi);
    } else {
        for (Eigen::Index k = 0; k < K; ++k)
            centers[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(K - 1);
    }
    return build_basis_at(spec, centers, grid, rule);
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& A, double tol) {
    if (A.size() == 0) return 0;
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    return (s.array() > tol * s[0]).count();
}

BasisRanks rank_diagnostics(const TestFunctionBasis& basis, double tol) {
    return {numerical_rank(basis.phi0, tol), numerical_rank(basis.phi1, tol),
            numerical_rank(basis.phi2, tol)};
}

}  // namespace weakid
