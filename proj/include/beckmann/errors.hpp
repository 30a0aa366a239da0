#pragma once

#include <stdexcept>
#include <string>

namespace beckmann {

/// Base class for all library-specific failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent configuration input. Messages carry the
/// offending key path (e.g. "params.epsilon").
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Line search could not produce an acceptable step (non-descent direction
/// or backtracking budget exhausted).
class LineSearchError : public Error {
public:
    explicit LineSearchError(const std::string& what) : Error(what) {}
};

/// Direct linear solve failed or its residual check did not pass.
class LinearSolveError : public Error {
public:
    LinearSolveError(const std::string& what, double achieved_residual)
        : Error(what), achieved_residual(achieved_residual) {}

    double achieved_residual = 0.0;
};

} // namespace beckmann
