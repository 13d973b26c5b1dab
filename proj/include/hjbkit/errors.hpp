#pragma once

#include <stdexcept>
#include <string>

namespace hjbkit {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration (k <= 0, bad grid, malformed descriptor, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A coefficient map produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (u <= 0, x <= 0, A >= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Explicit time step violates the stability bound.
class StabilityError : public ParameterError {
public:
    StabilityError(const std::string& what, long long min_steps)
        : ParameterError(what), min_steps_(min_steps) {}

    /// Smallest number of steps over the requested horizon that satisfies the bound.
    long long min_steps() const noexcept { return min_steps_; }

private:
    long long min_steps_;
};

/// Solver or estimator diverged (overflow guard tripped, non-finite update).
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Too many Monte Carlo paths were excluded for non-finite states.
class ExclusionError : public Error {
public:
    using Error::Error;
};

} // namespace hjbkit
