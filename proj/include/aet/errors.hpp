#pragma once

#include <stdexcept>
#include <string>

namespace aet {

// Bad user-facing parameter or inconsistent arguments.
class InvalidParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bad run configuration (presets, file headers, mesh mismatches).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Query point outside the computational domain.
class PointOutsideDomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Nonpositive conductivity at a quadrature point.
class CoercivityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative linear solver did not reach the requested tolerance.
class SolverFailureError : public std::runtime_error {
public:
    SolverFailureError(const std::string& what, int iterations, double residual)
        : std::runtime_error(what), iterations(iterations), residual(residual) {}

    int iterations;
    double residual;
};

// Armijo backtracking exhausted its budget without sufficient decrease.
class LineSearchFailureError : public std::runtime_error {
public:
    LineSearchFailureError(const std::string& what, int backtracks)
        : std::runtime_error(what), backtracks(backtracks) {}

    int backtracks;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace aet
