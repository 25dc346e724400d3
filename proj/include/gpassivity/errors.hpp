#pragma once

#include <stdexcept>
#include <string>

namespace gpassivity {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A state (or marginal) has an eigenvalue too close to zero for -ln(rho)
// to be defined.
struct SingularStateError : Error {
    explicit SingularStateError(const std::string& what, double eigenvalue)
        : Error(what), offending_eigenvalue(eigenvalue) {}
    double offending_eigenvalue;
};

// Requested correlation amplitude would make the pair state non-PSD.
struct InfeasibleCorrelationError : Error {
    InfeasibleCorrelationError(const std::string& what, double bound)
        : Error(what), feasible_bound(bound) {}
    double feasible_bound;  // largest |C| that keeps the state PSD
};

// An eigenvalue fell outside the domain of a scalar function applied to an
// operator (e.g. ln of a zero eigenvalue, fractional power of a negative).
struct DomainError : Error {
    explicit DomainError(const std::string& what, double eigenvalue)
        : Error(what), offending_eigenvalue(eigenvalue) {}
    double offending_eigenvalue;
};

// D(rho2 | rho1) diverges: rho2 has support outside the support of rho1.
struct InfiniteDivergenceError : Error {
    using Error::Error;
};

// Fixed-step integrator guard tripped (step too large or trace drifted).
struct IntegratorError : Error {
    using Error::Error;
};

}  // namespace gpassivity
