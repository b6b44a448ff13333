#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace weakid {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite state, or the blood model's 1 + x1 denominator hitting zero.
class InvalidStateError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double last_time)
        : Error(what), last_time_(last_time) {}
    double last_time() const { return last_time_; }

private:
    double last_time_;
};

// Support radius too large for the time window.
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularDenominatorError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public Error {
public:
    RankDeficientError(const std::string& what, std::vector<std::size_t> columns)
        : Error(what), columns_(std::move(columns)) {}
    const std::vector<std::size_t>& deficient_columns() const { return columns_; }

private:
    std::vector<std::size_t> columns_;
};

class CovarianceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace weakid
