#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace saddleflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance used to decide whether a coordinate sits on one of its bounds.
inline constexpr double kBoundTol = 1e-9;

// Error kinds. Every module throws one of these; callers that need to keep
// going (scans, batch runs) catch `Error` and record `what()`.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, empty lists, grid mismatch.
class InputError : public Error {
public:
    using Error::Error;
};

/// A point is not where the operation requires it (e.g. outside the domain).
class StateError : public Error {
public:
    using Error::Error;
};

/// A combinatorial guard was exceeded.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// A user callback failed or produced non-finite output.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// A modification's structural assumptions do not hold.
class SpecError : public Error {
public:
    using Error::Error;
};

/// The domain does not have the structure an operation requires.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Unknown builtin scenario id.
class CatalogError : public Error {
public:
    using Error::Error;
};

/// Invalid scenario configuration; the message starts with the field path.
class ConfigError : public Error {
public:
    ConfigError(const std::string& path, const std::string& msg)
        : Error(path + ": " + msg), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

inline void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
    if (v.size() != dim) {
        throw InputError(std::string(what) + ": expected length " + std::to_string(dim) + ", got " +
                         std::to_string(v.size()));
    }
}

/// Orthonormal basis (columns) of the null space of `m`.
/// Singular values at or below `tol * max(1, sigma_max)` count as zero.
Matrix null_space(const Matrix& m, double tol = 1e-10);

/// Orthonormal basis of the column span of `m` with the same rank rule.
Matrix orthonormal_columns(const Matrix& m, double tol = 1e-10);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace saddleflow
