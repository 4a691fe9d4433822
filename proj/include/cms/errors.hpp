#pragma once

#include <stdexcept>
#include <string>

namespace cms {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input (mesh parameters, material constants, selections).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or invalid configuration file.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// The frequency-response matrix is singular or numerically singular.
class ResonanceError : public Error {
public:
    ResonanceError(const std::string& what, double omega, double nearest_eigenvalue)
        : Error(what), omega_(omega), nearest_eigenvalue_(nearest_eigenvalue) {}

    double omega() const { return omega_; }
    /// Closest known eigenvalue (omega^2 units), NaN when not available.
    double nearest_eigenvalue() const { return nearest_eigenvalue_; }

private:
    double omega_;
    double nearest_eigenvalue_;
};

class EigenSolverError : public Error {
public:
    EigenSolverError(const std::string& what, int subspace, double residual)
        : Error(what), subspace_(subspace), residual_(residual) {}

    int subspace() const { return subspace_; }
    double residual() const { return residual_; }

private:
    int subspace_;
    double residual_;
};

/// Something that should be impossible for valid inputs (failed factorization
/// of an SPD block, indefinite energy form).
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace cms
