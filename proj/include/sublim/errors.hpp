#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sublim {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A function produced a non-finite value, divided by zero, etc.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reachable state space too large for exact enumeration.
class SizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Computational domain does not cover what the operation needs.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite intermediate value inside a solver.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace sublim
