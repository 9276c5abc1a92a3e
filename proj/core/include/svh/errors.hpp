#pragma once

#include <stdexcept>
#include <string>

namespace svh {

// Thrown when model/claim inputs fail validation or a config file is malformed.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A characteristic-exponent evaluation produced NaN/Inf.
struct NonFiniteResult : std::runtime_error {
    explicit NonFiniteResult(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the finite-moment domain of the model.
struct DomainViolation : std::runtime_error {
    explicit DomainViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// Laplace-transform evaluation too close to the poles u = 0, 1.
struct PoleError : std::runtime_error {
    explicit PoleError(const std::string& msg) : std::runtime_error(msg) {}
};

// No integration abscissa satisfies the moment condition for this claim.
struct NoValidStrip : std::runtime_error {
    explicit NoValidStrip(const std::string& msg) : std::runtime_error(msg) {}
};

// Adaptive quadrature exhausted its budget before reaching tolerance, or the
// integrand tripped a sanity check (branch jump, non-finite node value).
struct QuadratureFailure : std::runtime_error {
    explicit QuadratureFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Active-set QP failed to terminate within its iteration cap (after retry).
struct MaxIterations : std::runtime_error {
    explicit MaxIterations(const std::string& msg) : std::runtime_error(msg) {}
};

// Asset adds no independent risk given the current portfolio (Schur complement ~ 0).
struct RedundantAsset : std::runtime_error {
    explicit RedundantAsset(const std::string& msg) : std::runtime_error(msg) {}
};

// Subset enumeration would exceed the configured work budget.
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace svh
