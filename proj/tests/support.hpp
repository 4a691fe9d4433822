#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cms/problem.hpp"
#include "cms/types.hpp"

namespace cms::test {

/// 12x12 unit square, 3x2 subdomains, Gaussian traction on the top edge, every mode computed.
inline ProblemSpec small_spec() {
    ProblemSpec s;
    s.nx = 12;
    s.ny = 12;
    s.grid = {3, 2};
    s.traction = GaussianField{{0.7, 1.0}, {0.0, -1.0}, 1.0, 100.0};
    return s;
}

inline const Problem& small_problem() {
    static const Problem p = build_problem(small_spec());
    return p;
}

inline VectorC random_complex(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    VectorC v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
    return v;
}

inline Vector random_real(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

/// Generalized eigenvalues through an explicit Cholesky reduction L^-1 A L^-T.
inline Vector cholesky_reduced_eigenvalues(const Matrix& A, const Matrix& B) {
    const Eigen::LLT<Matrix> llt(B);
    const Matrix L = llt.matrixL();
    const Matrix Li = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(A.rows(), A.cols()));
    Matrix C = Li * A * Li.transpose();
    C = 0.5 * (C + C.transpose()).eval();
    return Eigen::SelfAdjointEigenSolver<Matrix>(C, Eigen::EigenvaluesOnly).eigenvalues();
}

/// Dense sqrt(v^H K v).
inline double dense_energy(const Matrix& K, const VectorC& v) {
    return std::sqrt(std::max(0.0, (v.adjoint() * K.cast<Complex>() * v)(0, 0).real()));
}

}  // namespace cms::test
