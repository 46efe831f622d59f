#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace neyman {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: bad design, ragged vectors, bad files. CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

class SupportTooLarge : public ValidationError {
public:
    SupportTooLarge(std::uint64_t count, std::uint64_t cap)
        : ValidationError("support too large: " + std::to_string(count) +
                          " vectors exceeds enumeration cap " + std::to_string(cap)),
          count_(count) {}
    std::uint64_t count() const { return count_; }

private:
    std::uint64_t count_;
};

class NotEnumerable : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InfeasibleThreshold : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Accept-reject sampler gave up.
class RetryBudgetExceeded : public Error {
public:
    RetryBudgetExceeded(std::uint64_t tries, double acceptance_rate)
        : Error("rerandomization retry budget exhausted after " + std::to_string(tries) +
                " tries (estimated acceptance rate " + std::to_string(acceptance_rate) + ")"),
          acceptance_rate_(acceptance_rate) {}
    double acceptance_rate() const { return acceptance_rate_; }

private:
    double acceptance_rate_;
};

// An estimator refuses to run because a design assumption fails. CLI exit code 3.
class AssumptionViolation : public Error {
public:
    using Error::Error;
};

class SubstitutionUndefined : public AssumptionViolation {
public:
    explicit SubstitutionUndefined(const std::string& what)
        : AssumptionViolation("substitution undefined: " + what) {}
};

class InfeasibleQ : public AssumptionViolation {
public:
    using AssumptionViolation::AssumptionViolation;
};

// Estimator value does not exist for the realized data (empty group, zero variance).
class UndefinedEstimate : public AssumptionViolation {
public:
    using AssumptionViolation::AssumptionViolation;
};

}  // namespace neyman
