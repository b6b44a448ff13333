#pragma once

#include "weakid/models.hpp"

#include <Eigen/Dense>

#include <string>

namespace weakid {

enum class TestFunctionFamily { CInfBump, Hartley3, Polynomial };

std::string to_string(TestFunctionFamily f);
TestFunctionFamily family_from_string(const std::string& s);

struct TestFunctionSpec {
    TestFunctionFamily family = TestFunctionFamily::Polynomial;
    double radius = 1.0;
    double eta = 9.0;  // CInfBump only
    int degree = 12;   // Polynomial only; even, >= 4
    double normalization = 0.0;  // set by normalized(); 0 means not yet computed

    static TestFunctionSpec bump(double radius, double eta = 9.0);
    static TestFunctionSpec hartley(double radius);
    static TestFunctionSpec polynomial(double radius, int degree);
};

// Validates the spec and fills in C so that the integral of phi^2 is 1.
TestFunctionSpec normalized(TestFunctionSpec spec);

double eval_testfn(const TestFunctionSpec& spec, double center, double t, int deriv_order);

enum class QuadratureRule { Trapezoid, Simpson };

Eigen::VectorXd quadrature_weights(const TimeGrid& grid, QuadratureRule rule);

struct TestFunctionBasis {
    TestFunctionSpec spec;
    Eigen::VectorXd centers;
    TimeGrid grid;
    Eigen::VectorXd weights;
    Eigen::MatrixXd phi0, phi1, phi2;  // K x (M+1), quadrature weights folded in

    Eigen::Index size() const { return phi0.rows(); }
};

TestFunctionBasis build_basis(const TestFunctionSpec& spec, Eigen::Index K, const TimeGrid& grid,
                              QuadratureRule rule = QuadratureRule::Trapezoid);

// Rows evaluated at caller-chosen centers (which must keep supports inside the grid).
TestFunctionBasis build_basis_at(const TestFunctionSpec& spec, const Eigen::VectorXd& centers,
                                 const TimeGrid& grid,
                                 QuadratureRule rule = QuadratureRule::Trapezoid);

Eigen::Index numerical_rank(const Eigen::MatrixXd& A, double tol = 1e-12);

struct BasisRanks {
    Eigen::Index rank0 = 0, rank1 = 0, rank2 = 0;
};

BasisRanks rank_diagnostics(const TestFunctionBasis& basis, double tol = 1e-12);

}  // namespace weakid
