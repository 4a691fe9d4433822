#include "cms/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "cms/errors.hpp"

namespace cms {

DofPartition classify_dofs(const Mesh& mesh, const DofMap& dofs) {
    const auto interface = interface_nodes(mesh);
    std::vector<int> label_of_node(mesh.num_nodes(), 0);
    for (int t = 0; t < mesh.num_triangles(); ++t)
        for (int v : mesh.triangles[t]) label_of_node[v] = mesh.subdomain_of_triangle[t];

    DofPartition partition;
    partition.n = mesh.n_subdomains;
    partition.interior_sets.resize(partition.n);
    for (int d = 0; d < dofs.size(); ++d) {
        const int node = dofs.node_of(d);
        if (interface.contains(node))
            partition.interface_set.push_back(d);
        else
            partition.interior_sets[label_of_node[node] - 1].push_back(d);
    }
    for (int i = 0; i < partition.n; ++i)
        if (partition.interior_sets[i].empty())
            throw InvalidArgument(
                fmt::format("subdomain {} has no interior degrees of freedom; mesh too coarse for CMS", i + 1));
    return partition;
}

SparseMatrix selection_matrix(int n_free, const std::vector<int>& idx) {
    std::vector<Triplet> t;
    t.reserve(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) t.emplace_back(idx[j], static_cast<int>(j), 1.0);
    SparseMatrix P(n_free, static_cast<int>(idx.size()));
    P.setFromTriplets(t.begin(), t.end());
    return P;
}

SparseMatrix principal_block(const SparseMatrix& A, const std::vector<int>& idx) {
    const SparseMatrix P = selection_matrix(static_cast<int>(A.rows()), idx);
    SparseMatrix block = P.transpose() * A * P;
    block.makeCompressed();
    return block;
}

namespace {

// Replaces each eigenvalue by the Rayleigh quotient of its stored, B-normalized
// vector. The reduced stiffness is the diagonal of these values, so it has to
// agree with Z^T A Z to rounding rather than to eigensolver accuracy.
template <class Mat>
void rayleigh_quotients(const Mat& A, const Mat& B, Matrix& Z, Vector& lam) {
    if (Z.cols() == 0) return;
    {
        // Ritz rotation removes the residual coupling between computed modes
        Matrix a = Z.transpose() * (A * Z);
        Matrix b = Z.transpose() * (B * Z);
        a = 0.5 * (a + a.transpose()).eval();
        b = 0.5 * (b + b.transpose()).eval();
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, b);
        if (es.info() == Eigen::Success) {
            Z = (Z * es.eigenvectors()).eval();
            normalize_signs(Z);
            lam = es.eigenvalues();
        }
    }
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        const Vector Bz = B * Z.col(j);
        const double mass = Z.col(j).dot(Bz);
        if (!(mass > 0.0)) continue;
        Z.col(j) /= std::sqrt(mass);
        const Vector Az = A * Z.col(j);
        lam[j] = Z.col(j).dot(Az);
    }
    std::vector<Eigen::Index> order(lam.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lam[a] < lam[b]; });
    if (std::is_sorted(order.begin(), order.end())) return;
    const Matrix Zs = Z;
    const Vector ls = lam;
    for (std::size_t j = 0; j < order.size(); ++j) {
        Z.col(j) = Zs.col(order[j]);
        lam[j] = ls[order[j]];
    }
}

template <class Vec>
Vec gather(const Vec& w, const std::vector<int>& idx) {
    Vec out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) out[j] = w[idx[j]];
    return out;
}

}  // namespace

ExtensionOperator::ExtensionOperator(const SparseMatrix& K, const DofPartition& partition)
    : partition_(partition), n_free_(static_cast<int>(K.rows())) {
    const auto& gamma = partition_.interface_set;
    const int n_gamma = static_cast<int>(gamma.size());
    columns_ = Matrix::Zero(n_free_, n_gamma);
    for (int j = 0; j < n_gamma; ++j) columns_(gamma[j], j) = 1.0;
    if (n_gamma == 0) return;

    const SparseMatrix P_gamma = selection_matrix(n_free_, gamma);
    for (int i = 1; i <= partition_.n; ++i) {
        const auto& idx = partition_.dofs(i);
        const SparseMatrix P = selection_matrix(n_free_, idx);
        const SparseMatrix Kii = P.transpose() * K * P;
        const SparseMatrix Kig = P.transpose() * K * P_gamma;
        Eigen::SimplicialLLT<SparseMatrix> llt(Kii);
        if (llt.info() != Eigen::Success)
            throw InternalError(fmt::format("interior stiffness block of subdomain {} is not positive definite", i));
        const Matrix rhs = Matrix(Kig);
        Matrix X = -llt.solve(rhs);
        // one refinement step keeps the interior solves at 1e-10 relative residual
        const Matrix res = -rhs - Kii * X;
        X += llt.solve(res);
        for (std::size_t r = 0; r < idx.size(); ++r) columns_.row(idx[r]) = X.row(static_cast<Eigen::Index>(r));
    }
}

Vector ExtensionOperator::apply(const Vector& nu) const {
    if (nu.size() != columns_.cols()) throw InvalidArgument("extension: interface vector has wrong size");
    return columns_ * nu;
}

ModalBasis::ModalBasis(int n_free, std::vector<SubspaceModes> subspaces, const SparseMatrix& K,
                       const SparseMatrix& M)
    : n_free_(n_free), subspaces_(std::move(subspaces)) {
    const int ns = num_subspaces();
    const auto couplings = [&](const SparseMatrix& A, std::vector<Matrix>& diag, std::vector<Matrix>& iface) {
        diag.resize(ns);
        iface.resize(ns);
        const Matrix AZ0 = subspaces_.empty() ? Matrix() : Matrix(A * lift(0));
        for (int s = 0; s < ns; ++s) {
            const auto& sub = subspaces_[s];
            if (s == 0) {
                diag[0] = sub.lifted.transpose() * AZ0;
                continue;
            }
            const SparseMatrix Ass = principal_block(A, sub.dofs);
            diag[s] = sub.local.transpose() * (Ass * sub.local);
            Matrix restricted(sub.dofs.size(), AZ0.cols());
            for (std::size_t r = 0; r < sub.dofs.size(); ++r)
                restricted.row(static_cast<Eigen::Index>(r)) = AZ0.row(sub.dofs[r]);
            iface[s] = restricted.transpose() * sub.local;
        }
        for (auto& g : diag) g = 0.5 * (g + g.transpose()).eval();
    };
    couplings(M, diag_mass_, interface_mass_);
    couplings(K, diag_stiffness_, interface_stiffness_);
}

std::vector<int> ModalBasis::counts() const {
    std::vector<int> k;
    for (const auto& s : subspaces_) k.push_back(s.count());
    return k;
}

Matrix ModalBasis::lift(int s, int first, int len) const {
    const auto& sub = subspaces_[s];
    if (s == 0) return sub.lifted.middleCols(first, len);
    Matrix out = Matrix::Zero(n_free_, len);
    for (std::size_t r = 0; r < sub.dofs.size(); ++r)
        out.row(sub.dofs[r]) = sub.local.row(static_cast<Eigen::Index>(r)).segment(first, len);
    return out;
}

VectorC ModalBasis::project(int s, const VectorC& w, int first, int len) const {
    const auto& sub = subspaces_[s];
    if (s == 0) return sub.lifted.middleCols(first, len).transpose().cast<Complex>() * w;
    const VectorC local_w = gather(w, sub.dofs);
    return sub.local.middleCols(first, len).transpose().cast<Complex>() * local_w;
}

Vector ModalBasis::project(int s, const Vector& w, int first, int len) const {
    const auto& sub = subspaces_[s];
    if (s == 0) return sub.lifted.middleCols(first, len).transpose() * w;
    return sub.local.middleCols(first, len).transpose() * gather(w, sub.dofs);
}

VectorC ModalBasis::combine(int s, const VectorC& coeffs, int first) const {
    const auto& sub = subspaces_[s];
    const auto len = coeffs.size();
    if (s == 0) return sub.lifted.middleCols(first, len).cast<Complex>() * coeffs;
    const VectorC local = sub.local.middleCols(first, len).cast<Complex>() * coeffs;
    VectorC out = VectorC::Zero(n_free_);
    for (std::size_t r = 0; r < sub.dofs.size(); ++r) out[sub.dofs[r]] = local[static_cast<Eigen::Index>(r)];
    return out;
}

namespace {

Matrix coupling_block(const std::vector<Matrix>& diag, const std::vector<Matrix>& iface, int s, int t, int rows,
                      int cols) {
    if (s == t) return diag[s].topLeftCorner(rows, cols);
    if (s == 0) return iface[t].topLeftCorner(rows, cols);
    if (t == 0) return iface[s].topLeftCorner(cols, rows).transpose();
    return Matrix::Zero(rows, cols);
}

}  // namespace

Matrix ModalBasis::mass_block(int s, int t, int rows, int cols) const {
    return coupling_block(diag_mass_, interface_mass_, s, t, rows, cols);
}

Matrix ModalBasis::stiffness_block(int s, int t, int rows, int cols) const {
    return coupling_block(diag_stiffness_, interface_stiffness_, s, t, rows, cols);
}

int ReducedSelection::total() const { return std::accumulate(m.begin(), m.end(), 0); }

void ReducedSelection::validate(const ModalBasis& basis) const {
    if (static_cast<int>(m.size()) != basis.num_subspaces())
        throw InvalidArgument(fmt::format("selection has {} entries, basis has {} subspaces", m.size(),
                                          basis.num_subspaces()));
    if (total() == 0) throw InvalidArgument("empty selection");
    for (int s = 0; s < basis.num_subspaces(); ++s) {
        const int k = basis.count(s);
        const int lo = k == 0 ? 0 : 1;
        if (m[s] < lo || m[s] > k)
            throw InvalidArgument(fmt::format("selection m_{} = {} outside [{}, {}]", s, m[s], lo, k));
    }
}

ModalBasis compute_modal_basis(const SparseMatrix& K, const SparseMatrix& M, const DofPartition& partition,
                               const ExtensionOperator& extension, const std::vector<int>& counts,
                               const ModalBasisOptions& options) {
    const int ns = partition.num_subspaces();
    if (static_cast<int>(counts.size()) != ns)
        throw InvalidArgument(fmt::format("expected {} mode counts, got {}", ns, counts.size()));
    const int n_free = static_cast<int>(K.rows());
    std::vector<SubspaceModes> subspaces(ns);

    {
        auto& sub = subspaces[0];
        sub.dofs = partition.interface_set;
        sub.dimension = static_cast<int>(sub.dofs.size());
        const int k = std::clamp(counts[0], 0, sub.dimension);
        const Matrix& E = extension.matrix();
        if (sub.dimension > 0 && k > 0) {
            Matrix S = E.transpose() * (K * E);
            Matrix T = E.transpose() * (M * E);
            S = 0.5 * (S + S.transpose()).eval();
            T = 0.5 * (T + T.transpose()).eval();
            try {
                auto pairs = dense_generalized_eigen(S, T, k);
                sub.eigenvalues = pairs.values;
                sub.local = pairs.vectors;
                rayleigh_quotients(S, T, sub.local, sub.eigenvalues);
            } catch (const EigenSolverError& e) {
                throw EigenSolverError(fmt::format("subspace 0: {}", e.what()), 0, e.residual());
            }
            sub.lifted = E * sub.local;
        } else {
            sub.eigenvalues.resize(0);
            sub.local.resize(sub.dimension, 0);
            sub.lifted.resize(n_free, 0);
        }
    }

    for (int s = 1; s < ns; ++s) {
        auto& sub = subspaces[s];
        sub.dofs = partition.dofs(s);
        sub.dimension = static_cast<int>(sub.dofs.size());
        const int k = std::clamp(counts[s], 0, sub.dimension);
        const SparseMatrix Kss = principal_block(K, sub.dofs);
        const SparseMatrix Mss = principal_block(M, sub.dofs);
        auto pairs = lowest_eigenpairs(Kss, Mss, k, options.eigen, s);
        sub.eigenvalues = std::move(pairs.values);
        sub.local = std::move(pairs.vectors);
        rayleigh_quotients(Kss, Mss, sub.local, sub.eigenvalues);
    }

    for (int s = 0; s < ns; ++s) {
        const auto& ev = subspaces[s].eigenvalues;
        for (Eigen::Index j = 0; j < ev.size(); ++j)
            if (!(ev[j] > 0.0) || (j > 0 && ev[j] < ev[j - 1]))
                throw EigenSolverError(fmt::format("subspace {}: eigenvalues not positive and ascending", s), s,
                                       std::nan(""));
    }
    return ModalBasis(n_free, std::move(subspaces), K, M);
}

VectorC ritz_project(const SparseMatrix& K, const ModalBasis& basis, int s, const VectorC& w) {
    const VectorC Kw = K * w;
    VectorC c = basis.project(s, Kw, 0, basis.count(s));
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] /= basis.eigenvalue(s, static_cast<int>(j));
    return c;
}

}  // namespace cms
