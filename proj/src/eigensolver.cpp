#include "cms/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "cms/errors.hpp"

namespace cms {

namespace {

// Eigen's generalized solver does not report a failed Cholesky factorization of B.
void require_positive_definite(const Matrix& B) {
    if (Eigen::LLT<Matrix>(B).info() != Eigen::Success)
        throw EigenSolverError("mass matrix is not positive definite", -1, std::nan(""));
}

}  // namespace

void normalize_signs(Matrix& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        auto col = vectors.col(j);
        const double cutoff = 1e-8 * col.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            if (std::abs(col[i]) > cutoff) {
                if (col[i] < 0.0) col = -col;
                break;
            }
        }
    }
}

EigenPairs dense_generalized_eigen(const Matrix& A, const Matrix& B, int count) {
    const auto n = A.rows();
    if (count < 0 || count > n) throw InvalidArgument(fmt::format("requested {} eigenpairs of a {}-dimensional problem", count, n));
    EigenPairs result;
    if (count == 0) {
        result.values.resize(0);
        result.vectors.resize(n, 0);
        return result;
    }
    require_positive_definite(B);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(A, B, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) throw EigenSolverError("dense generalized eigensolver failed", -1, std::nan(""));
    result.values = solver.eigenvalues().head(count);
    result.vectors = solver.eigenvectors().leftCols(count);
    normalize_signs(result.vectors);
    return result;
}

Vector all_eigenvalues(const Matrix& A, const Matrix& B) {
    if (A.rows() == 0) return Vector(0);
    require_positive_definite(B);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(A, B, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) throw EigenSolverError("dense generalized eigensolver failed", -1, std::nan(""));
    return solver.eigenvalues();
}

namespace {

// B-orthogonalizes column `j` of Q against columns [0, j) and normalizes it.
// Returns the norm before normalization relative to the input norm.
double orthonormalize_column(Matrix& Q, Eigen::Index j, const SparseMatrix& B) {
    auto q = Q.col(j);
    const double initial = std::sqrt(std::max(q.dot(B * q), 0.0));
    if (initial == 0.0) return 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        if (j > 0) {
            const Vector Bq = B * q;
            const Vector coeff = Q.leftCols(j).transpose() * Bq;
            q -= Q.leftCols(j) * coeff;
        }
    }
    const double norm = std::sqrt(std::max(q.dot(B * q), 0.0));
    if (norm > 0.0) q /= norm;
    return norm / initial;
}

}  // namespace

EigenPairs shift_invert_eigen(const SparseMatrix& A, const SparseMatrix& B, int count,
                              const EigenSolverOptions& options) {
    const int n = static_cast<int>(A.rows());
    if (count < 0 || count > n) throw InvalidArgument(fmt::format("requested {} eigenpairs of a {}-dimensional problem", count, n));
    EigenPairs result;
    if (count == 0) {
        result.values.resize(0);
        result.vectors.resize(n, 0);
        return result;
    }

    SparseMatrix shifted = A - options.shift * B;
    Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
    if (factor.info() != Eigen::Success) throw EigenSolverError("shift-invert factorization failed", -1, std::nan(""));

    const int block = std::max(1, std::min(options.block_size, n));
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    int dimension = std::min(n, std::max(2 * count + 2 * block, count + 24));
    double worst = 0.0;
    while (true) {
        // Block Krylov basis of (A - shift B)^{-1} B, B-orthonormal.
        Matrix Q(n, dimension);
        for (Eigen::Index p = 0; p < dimension; ++p) {
            if (p < block)
                Q.col(p) = Vector::NullaryExpr(n, [&]() { return dist(rng); });
            else
                Q.col(p) = factor.solve(B * Q.col(p - block));
            // a collapsed direction is replaced by a fresh random vector
            int attempts = 0;
            while (orthonormalize_column(Q, p, B) < 1e-8 && attempts++ < 5)
                Q.col(p) = Vector::NullaryExpr(n, [&]() { return dist(rng); });
        }

        const Matrix AQ = A * Q;
        Matrix Ak = Q.transpose() * AQ;
        Matrix Bk = Q.transpose() * (B * Q);
        Ak = 0.5 * (Ak + Ak.transpose()).eval();
        Bk = 0.5 * (Bk + Bk.transpose()).eval();
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ritz(Ak, Bk, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
        if (ritz.info() != Eigen::Success) throw EigenSolverError("Rayleigh-Ritz step failed", -1, std::nan(""));

        result.values = ritz.eigenvalues().head(count);
        result.vectors = Q * ritz.eigenvectors().leftCols(count);
        const Matrix R = A * result.vectors - B * result.vectors * result.values.asDiagonal();
        worst = 0.0;
        for (int j = 0; j < count; ++j) {
            const double denom = std::abs(result.values[j]) * (B * result.vectors.col(j)).norm();
            worst = std::max(worst, R.col(j).norm() / std::max(denom, 1e-300));
        }
        if (worst <= options.tolerance) break;
        if (dimension == n)
            throw EigenSolverError(fmt::format("shift-invert iteration did not converge (residual {:.3e})", worst), -1,
                                   worst);
        dimension = std::min(n, 2 * dimension);
    }
    normalize_signs(result.vectors);
    return result;
}

EigenPairs lowest_eigenpairs(const SparseMatrix& A, const SparseMatrix& B, int count,
                             const EigenSolverOptions& options, int subspace) {
    try {
        if (A.rows() <= options.dense_threshold) return dense_generalized_eigen(Matrix(A), Matrix(B), count);
        return shift_invert_eigen(A, B, count, options);
    } catch (const EigenSolverError& e) {
        throw EigenSolverError(fmt::format("subspace {}: {}", subspace, e.what()), subspace, e.residual());
    }
}

}  // namespace cms
