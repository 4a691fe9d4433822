#pragma once

#include <cstdint>

#include "cms/types.hpp"

namespace cms {

/// Lowest eigenpairs of A z = lambda B z, A symmetric, B symmetric positive
/// definite. Columns of `vectors` are B-orthonormal, eigenvalues ascending.
struct EigenPairs {
    Vector values;
    Matrix vectors;
};

struct EigenSolverOptions {
    /// Problems up to this size use the dense solver.
    int dense_threshold = 2000;
    /// Relative residual |A z - lambda B z| / (|lambda| |B z|) accepted by the iterative solver.
    double tolerance = 1e-10;
    /// Shift for the shift-invert operator (A - shift B)^{-1} B.
    double shift = 0.0;
    int block_size = 4;
    std::uint64_t seed = 0;
};

EigenPairs dense_generalized_eigen(const Matrix& A, const Matrix& B, int count);

/// Shift-invert block Krylov iteration with Rayleigh-Ritz extraction.
EigenPairs shift_invert_eigen(const SparseMatrix& A, const SparseMatrix& B, int count,
                              const EigenSolverOptions& options = {});

/// Dispatches on problem size. `subspace` only labels error messages.
EigenPairs lowest_eigenpairs(const SparseMatrix& A, const SparseMatrix& B, int count,
                             const EigenSolverOptions& options = {}, int subspace = -1);

/// All eigenvalues of the pencil (A, B), ascending (dense).
Vector all_eigenvalues(const Matrix& A, const Matrix& B);

/// Flips columns so that the first entry of significant magnitude is positive.
void normalize_signs(Matrix& vectors);

}  // namespace cms
