#pragma once

#include <stdexcept>
#include <string>

namespace refdiff {

/// A model, functional, or configuration violates a hypothesis the solvers rely on.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to converge or produced an inconsistent result.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The single-barrier process has no stationary distribution (or the
/// truncation point is too small to detect convergence).
class NonErgodicError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace refdiff
