#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hawkes {

// Invalid model, query or configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InstabilityError : public std::domain_error {
public:
    InstabilityError(const std::string& msg, double rho) : std::domain_error(msg), rho_(rho) {}
    double spectral_radius() const { return rho_; }

private:
    double rho_;
};

// Iteration or quadrature did not reach its tolerance.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& msg, std::vector<double> trace = {})
        : std::runtime_error(msg), trace_(std::move(trace)) {}
    const std::vector<double>& residual_trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

// Model is valid but outside the range the asymptotic theory covers.
class OutOfScopeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UnsupportedConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class CapExceededError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hawkes
