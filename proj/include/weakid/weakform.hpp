#pragma once

#include "weakid/testfn.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace weakid {

struct WeakLinearSystem {
    Eigen::MatrixXd G;
    Eigen::VectorXd b;
    double condition_number = 0.0;
};

// Trapezoid running integral, zero at t0.
Eigen::VectorXd cumulative_integral(const Eigen::VectorXd& series, const TimeGrid& grid);

WeakLinearSystem assemble_blood(const Eigen::VectorXd& x1, const TestFunctionBasis& basis);
WeakLinearSystem assemble_sir(const Eigen::VectorXd& I, const TestFunctionBasis& basis,
                              double alpha, double S0);
WeakLinearSystem assemble_sir_alt(const Eigen::VectorXd& I, const TestFunctionBasis& basis,
                                  double alpha, double N);

enum class WeakVariant { BloodDiffusionIO, SirIO, SirIOAlt };

std::string to_string(WeakVariant v);
WeakVariant variant_from_string(const std::string& s);

class WeakObservationModel {
public:
    virtual ~WeakObservationModel() = default;

    virtual WeakVariant variant() const = 0;
    virtual std::vector<std::string> unknown_names() const = 0;
    virtual WeakLinearSystem assemble(const Eigen::VectorXd& obs,
                                      const TestFunctionBasis& basis) const = 0;
    // d(Gw - b)/d(obs), K x (M+1).
    virtual Eigen::MatrixXd data_jacobian(const Eigen::VectorXd& obs,
                                          const TestFunctionBasis& basis,
                                          const Eigen::VectorXd& w) const = 0;
};

class BloodDiffusionIO final : public WeakObservationModel {
public:
    WeakVariant variant() const override { return WeakVariant::BloodDiffusionIO; }
    std::vector<std::string> unknown_names() const override { return {"w1", "w2", "w3"}; }
    WeakLinearSystem assemble(const Eigen::VectorXd& obs,
                              const TestFunctionBasis& basis) const override;
    Eigen::MatrixXd data_jacobian(const Eigen::VectorXd& obs, const TestFunctionBasis& basis,
                                  const Eigen::VectorXd& w) const override;

    // (k12, k21, Ve) <-> (w1, w2, w3)
    static Eigen::Vector3d unknowns_from_params(const BloodDiffusionParams& p);
    static BloodDiffusionParams params_from_unknowns(const Eigen::Vector3d& w);
};

class SirIO final : public WeakObservationModel {
public:
    SirIO(double alpha, double S0) : alpha_(alpha), S0_(S0) {}
    WeakVariant variant() const override { return WeakVariant::SirIO; }
    std::vector<std::string> unknown_names() const override { return {"beta"}; }
    WeakLinearSystem assemble(const Eigen::VectorXd& obs,
                              const TestFunctionBasis& basis) const override;
    Eigen::MatrixXd data_jacobian(const Eigen::VectorXd& obs, const TestFunctionBasis& basis,
                                  const Eigen::VectorXd& w) const override;

private:
    double alpha_, S0_;
};

class SirIOAlt final : public WeakObservationModel {
public:
    SirIOAlt(double alpha, double N) : alpha_(alpha), N_(N) {}
    WeakVariant variant() const override { return WeakVariant::SirIOAlt; }
    std::vector<std::string> unknown_names() const override { return {"beta"}; }
    WeakLinearSystem assemble(const Eigen::VectorXd& obs,
                              const TestFunctionBasis& basis) const override;
    Eigen::MatrixXd data_jacobian(const Eigen::VectorXd& obs, const TestFunctionBasis& basis,
                                  const Eigen::VectorXd& w) const override;

private:
    double alpha_, N_;
};

}  // namespace weakid
