#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlobs {

enum class ErrorKind {
    parameter,         // out-of-range scalar parameter
    shape,             // field length mismatch
    mode,              // operation not available for this closure
    unsupported,       // regime outside what the solvers accept
    geometry,          // obstacle support vs. domain
    convergence,       // iterative solver ran out of sweeps
    stability,         // explicit step above its stability limit
    step,              // per-node Newton failure inside a time step
    domain,            // heat-kernel tail does not fit the domain
    fit,               // ill-conditioned local fit
    assembly,          // report is missing a registry claim
    config,            // configuration parse / validation
    missing_artifact,  // CLI stage input not found
    io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes the cause.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Newton failure at a specific grid node.
class StepError : public Error {
public:
    StepError(std::size_t node, const std::string& what)
        : Error(ErrorKind::step, what), node_(node) {}

    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// PSOR sweep limit exceeded; carries the last complementarity residual.
class ConvergenceError : public Error {
public:
    ConvergenceError(double residual, const std::string& what)
        : Error(ErrorKind::convergence, what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace nlobs
