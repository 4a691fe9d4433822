#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "cms/decomposition.hpp"
#include "cms/fem.hpp"
#include "cms/types.hpp"

namespace cms {

/// The full-order system projected onto the modes selected by m.
///
/// K^m is the diagonal of retained eigenvalues, M^m the projected mass matrix
/// (identity within each subspace block), b^m the projected load. The damping
/// matrix is formed as alpha K^m + beta M^m when solving. The basis must
/// outlive the model.
///
/// Kc is the projected stiffness (V^m)^T K V^m. It differs from diag(K^m) only
/// by the round-off of the stored modes, about eps |z|^T |K| |z|. The response
/// matrix uses Kc so that the reduced solution is the Galerkin projection of
/// the full problem to rounding, also when the response amplifies that error.
struct ReducedModel {
    Vector Km;
    Matrix Kc;
    Matrix Mm;
    Vector bm;
    ReducedSelection selection;
    std::vector<std::pair<int, int>> mode_index;  // reduced index -> (subspace, mode)
    const ModalBasis* basis = nullptr;

    int size() const { return static_cast<int>(Km.size()); }
    /// Start of subspace s inside the reduced vector.
    int offset(int s) const;
    /// Expands reduced coefficients to a free-DOF vector (V^m c).
    VectorC expand(const VectorC& coeffs) const;
    /// (V^m)^T w.
    VectorC restrict(const VectorC& w) const;
    /// Dense V^m (n_free x size()).
    Matrix basis_matrix() const;
};

/// Reduced solution U^m. The free-DOF expansion is computed on first use and cached.
class ReducedSolution {
public:
    ReducedSolution() = default;
    ReducedSolution(const ReducedModel& model, VectorC coefficients, double omega);

    const VectorC& coefficients() const { return coefficients_; }
    double omega() const { return omega_; }
    const ReducedSelection& selection() const { return model_->selection; }
    const ReducedModel& model() const { return *model_; }
    const VectorC& full_expansion() const;

private:
    struct Cache {
        std::once_flag once;
        VectorC full;
    };
    std::shared_ptr<const ReducedModel> model_;
    VectorC coefficients_;
    double omega_ = 0.0;
    std::shared_ptr<Cache> cache_;
};

ReducedModel project(const FullOrderSystem& system, const ModalBasis& basis, const ReducedSelection& selection);
/// Same projection with another right-hand side (e.g. a dual load).
ReducedModel project(const FullOrderSystem& system, const ModalBasis& basis, const ReducedSelection& selection,
                     const Vector& rhs);

/// Dense complex LU solve of (Kc + i omega D^m - omega^2 M^m) u = b^m, D^m = alpha Kc + beta M^m.
/// Throws ResonanceError (with the nearest reduced eigenvalue) if singular.
ReducedSolution solve_reduced(const ReducedModel& model, double omega, const Material& material);

/// Relative residual of a reduced solve.
double reduced_residual(const ReducedModel& model, double omega, const Material& material, const VectorC& u);

/// Ascending eigenvalues of (K^m, M^m).
Vector reduced_eigenvalues(const ReducedModel& model);

}  // namespace cms
