#pragma once

#include <vector>

#include "cms/eigensolver.hpp"
#include "cms/fem.hpp"
#include "cms/mesh.hpp"
#include "cms/types.hpp"

namespace cms {

/// Free DOFs split into n interior sets (one per subdomain) and the interface
/// set. Subspace ids follow the convention 0 = interface, i = subdomain i.
struct DofPartition {
    std::vector<std::vector<int>> interior_sets;  // interior_sets[i - 1] for subdomain i
    std::vector<int> interface_set;
    int n = 0;

    int num_subspaces() const { return n + 1; }
    /// Free-DOF indices of subspace s (0 = interface).
    const std::vector<int>& dofs(int s) const { return s == 0 ? interface_set : interior_sets[s - 1]; }
};

DofPartition classify_dofs(const Mesh& mesh, const DofMap& dofs);

/// Selection matrix P (n_free x |idx|) with P(idx[j], j) = 1.
SparseMatrix selection_matrix(int n_free, const std::vector<int>& idx);
/// Principal submatrix A(idx, idx).
SparseMatrix principal_block(const SparseMatrix& A, const std::vector<int>& idx);

/// Energy-minimizing (discrete harmonic) extension of interface data.
///
/// For interface values nu, E nu equals nu on the interface and solves
/// K_II x_I = -K_IG nu on each subdomain interior.
class ExtensionOperator {
public:
    ExtensionOperator() = default;
    ExtensionOperator(const SparseMatrix& K, const DofPartition& partition);

    int interface_size() const { return static_cast<int>(partition_.interface_set.size()); }
    int full_size() const { return n_free_; }

    Vector apply(const Vector& nu) const;
    /// Dense matrix whose columns are E e_j for every interface DOF j.
    const Matrix& matrix() const { return columns_; }

private:
    DofPartition partition_;
    int n_free_ = 0;
    Matrix columns_;
};

/// Modes of one subspace. Interior modes are stored on their own index block;
/// interface modes are stored lifted to the full free-DOF space.
struct SubspaceModes {
    std::vector<int> dofs;  // free-DOF support (interior) or interface DOFs
    Vector eigenvalues;     // ascending
    Matrix local;           // interior: |dofs| x k; interface: interface coefficients nu
    Matrix lifted;          // interface only: n_free x k
    int dimension = 0;      // dim V_i

    int count() const { return static_cast<int>(eigenvalues.size()); }
};

/// M-orthonormal, K-diagonal modal bases of all subspaces, plus the mass and
/// stiffness couplings needed to project M and K onto any selection without
/// touching the full matrices again.
class ModalBasis {
public:
    ModalBasis() = default;
    ModalBasis(int n_free, std::vector<SubspaceModes> subspaces, const SparseMatrix& K, const SparseMatrix& M);

    int num_subspaces() const { return static_cast<int>(subspaces_.size()); }
    int full_size() const { return n_free_; }
    const SubspaceModes& subspace(int s) const { return subspaces_[s]; }
    int count(int s) const { return subspaces_[s].count(); }
    int dimension(int s) const { return subspaces_[s].dimension; }
    double eigenvalue(int s, int j) const { return subspaces_[s].eigenvalues[j]; }
    std::vector<int> counts() const;

    /// Full free-DOF vectors of modes [first, first + len) of subspace s.
    Matrix lift(int s, int first, int len) const;
    Matrix lift(int s) const { return lift(s, 0, count(s)); }
    /// Z_{s,j}^T w for modes [first, first + len).
    VectorC project(int s, const VectorC& w, int first, int len) const;
    Vector project(int s, const Vector& w, int first, int len) const;
    /// sum_j c_j Z_{s, first + j} as a full free-DOF vector.
    VectorC combine(int s, const VectorC& coeffs, int first) const;

    /// Z_{s,i}^T M Z_{t,j} for s, t in {0, s'}; zero for distinct interior subspaces.
    Matrix mass_block(int s, int t, int rows, int cols) const;
    /// Z_{s,i}^T K Z_{t,j}, diagonal up to the round-off of the stored modes.
    Matrix stiffness_block(int s, int t, int rows, int cols) const;

private:
    int n_free_ = 0;
    std::vector<SubspaceModes> subspaces_;
    std::vector<Matrix> diag_mass_;       // Z_s^T M Z_s
    std::vector<Matrix> interface_mass_;  // Z_0^T M Z_s (s >= 1)
    std::vector<Matrix> diag_stiffness_;
    std::vector<Matrix> interface_stiffness_;
};

/// Retained mode counts per subspace (m_0, ..., m_n).
struct ReducedSelection {
    std::vector<int> m;

    int total() const;
    /// Throws unless 1 <= m_i <= k_i (m_i = 0 allowed only for empty subspaces).
    void validate(const ModalBasis& basis) const;
};

struct ModalBasisOptions {
    EigenSolverOptions eigen;
};

/// Computes min(counts[s], dim V_s) modes per subspace. Interior subspaces use
/// K_ii z = lambda M_ii z; the interface uses (E^T K E, E^T M E).
ModalBasis compute_modal_basis(const SparseMatrix& K, const SparseMatrix& M, const DofPartition& partition,
                               const ExtensionOperator& extension, const std::vector<int>& counts,
                               const ModalBasisOptions& options = {});

/// Modal coefficients of the Ritz projection of w onto subspace s:
/// c_j = (Z_{s,j}^T K w) / Lambda_{s,j}.
VectorC ritz_project(const SparseMatrix& K, const ModalBasis& basis, int s, const VectorC& w);

}  // namespace cms
