#pragma once

#include <stdexcept>
#include <string>

namespace snimpa {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
   public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain_error"; }
};

/// A documented precondition does not hold. `field()` names the offending input.
class PreconditionError : public Error {
   public:
    PreconditionError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }
    const char* kind() const noexcept override { return "precondition_error"; }

   private:
    std::string field_;
};

/// Invalid configuration (schema, units, invariants of loaded data).
class ConfigError : public PreconditionError {
   public:
    using PreconditionError::PreconditionError;
    const char* kind() const noexcept override { return "config_error"; }
};

/// Iterative solver failed; carries the last residual it saw.
class SolverError : public Error {
   public:
    SolverError(const std::string& what, double last_residual)
        : Error(what + " (last residual " + std::to_string(last_residual) + ")"),
          residual_(last_residual) {}
    double last_residual() const noexcept { return residual_; }
    const char* kind() const noexcept override { return "solver_error"; }

   private:
    double residual_;
};

class SingularityError : public Error {
   public:
    using Error::Error;
    const char* kind() const noexcept override { return "singularity_error"; }
};

/// Pump at or above the parametric oscillation threshold.
class InstabilityError : public Error {
   public:
    InstabilityError(double epsilon, double critical_epsilon)
        : Error("pump depth " + std::to_string(epsilon) +
                " is at or above the oscillation threshold, critical epsilon = " +
                std::to_string(critical_epsilon)),
          critical_(critical_epsilon) {}
    double critical_epsilon() const noexcept { return critical_; }
    const char* kind() const noexcept override { return "instability_error"; }

   private:
    double critical_;
};

class FitError : public Error {
   public:
    FitError(const std::string& what, double residual_rms)
        : Error(what), residual_rms_(residual_rms) {}
    double residual_rms() const noexcept { return residual_rms_; }
    const char* kind() const noexcept override { return "fit_error"; }

   private:
    double residual_rms_;
};

class RankDeficiencyError : public FitError {
   public:
    explicit RankDeficiencyError(const std::string& what) : FitError(what, 0.0) {}
    const char* kind() const noexcept override { return "rank_deficiency"; }
};

/// Measured quantity violates a physical bound (calibration or measurement fault).
class ConsistencyError : public Error {
   public:
    using Error::Error;
    const char* kind() const noexcept override { return "consistency_error"; }
};

}  // namespace snimpa
