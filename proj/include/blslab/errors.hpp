#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blslab {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive quadrature could not reach the requested tolerance.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bracketing or Newton iteration failed to locate a root.
class RootFindingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Score evaluated where the generator's log-derivative is singular.
class SingularityError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Observed information is not positive definite.
class SingularInformationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No grid point or start produced a usable fit.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conditioning event has (numerically) zero probability.
class ZeroProbabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based data row (0 for the header).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row)
        : std::runtime_error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

} // namespace blslab
