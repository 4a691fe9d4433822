#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cms/decomposition.hpp"
#include "cms/fem.hpp"
#include "cms/reduced_model.hpp"
#include "cms/types.hpp"

namespace cms {

/// r = b - K U^m - i omega D U^m + omega^2 M U^m on the free DOFs.
struct AlgebraicResidual {
    VectorC r;
    double omega = 0.0;
    /// max |(V^m)^T r| / |b|, which Galerkin orthogonality keeps at round-off.
    double galerkin_violation = 0.0;
};

AlgebraicResidual algebraic_residual(const FullOrderSystem& system, const ReducedSolution& solution);
AlgebraicResidual algebraic_residual(const FullOrderSystem& system, const ReducedSolution& solution,
                                     const Vector& rhs);

/// d_i = min(m_i + extra, k_i).
std::vector<int> default_depth(const ModalBasis& basis, const ReducedSelection& m, int extra);
/// d_i = k_i.
std::vector<int> full_depth(const ModalBasis& basis);

/// Squared L2 norms of the subspace residuals, |R_i|^2 = sum_{m_i < j <= d_i} |Z_{i,j}^T r|^2.
/// Valid because the modes are M-orthonormal, so no mass solve is needed.
struct SubspaceResidualNorms {
    std::vector<double> squared;
    std::vector<int> m;
    std::vector<int> depth;
};

SubspaceResidualNorms subspace_residual_norms(const AlgebraicResidual& residual, const ModalBasis& basis,
                                              const ReducedSelection& m, const std::vector<int>& depth);

/// Residual norms over the complete eigenbasis of every subspace, including
/// modes that were never computed. The sum over all modes of |Z_{i,j}^T r|^2
/// equals r_i^H M_ii^{-1} r_i for an interior block and
/// (E^T r)^H (E^T M E)^{-1} (E^T r) for the interface; the retained part is
/// then subtracted.
class CompleteResidualNorms {
public:
    CompleteResidualNorms(const SparseMatrix& M, const DofPartition& partition, const ExtensionOperator& extension);
    ~CompleteResidualNorms();
    CompleteResidualNorms(CompleteResidualNorms&&) noexcept;

    /// sum over all modes of subspace s of |Z_{s,j}^T r|^2.
    std::vector<double> totals(const VectorC& r) const;
    SubspaceResidualNorms operator()(const AlgebraicResidual& residual, const ModalBasis& basis,
                                     const ReducedSelection& m) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Goal functional H(v) = psi^T M v for a nodal goal vector psi.
Vector goal_load(const FullOrderSystem& system, const Vector& psi);
Complex goal_value(const FullOrderSystem& system, const Vector& psi, const VectorC& u);

/// Dual solution: (K + i omega D - omega^2 M) Phi = M psi, solved at full order.
/// With the bilinear pairing used throughout, H(E) = Phi^T r.
VectorC solve_dual(const FullOrderSystem& system, const Vector& psi, double omega);
/// Dual solution approximated in the enlarged reduced space selected by `depth`.
VectorC solve_dual(const FullOrderSystem& system, const ModalBasis& basis, const Vector& psi, double omega,
                   const ReducedSelection& depth);

struct GoalIndicators {
    std::vector<double> eta;           // |sum of tail terms| per subspace
    std::vector<Complex> signed_sums;  // sum of tail terms per subspace
    Complex signed_total{0.0, 0.0};    // equals H(E) with an exact dual and complete tails
    double estimate = 0.0;             // sum of eta, bounds |H(E)|
};

/// eta_{J,i} = |sum_{m_i < j <= d_i} (Z_{i,j}^T r)(Z_{i,j}^T K Phi) / Lambda_{i,j}|.
GoalIndicators goal_indicators(const SparseMatrix& K, const AlgebraicResidual& residual, const VectorC& phi,
                               const ModalBasis& basis, const ReducedSelection& m, const std::vector<int>& depth);

enum class SpectrumSource { FullSpectrum, ReducedSpectrum };

struct StabilityFactor {
    double S = 0.0;
    double omega = 0.0;
    std::vector<double> spectrum_used;
    SpectrumSource source = SpectrumSource::ReducedSpectrum;
};

/// max_j sqrt((w^4 + w^2 c_j^2) l_j / ((l_j - w^2)^2 + w^2 c_j^2)), c_j = alpha l_j + beta.
StabilityFactor stability_factor(const Vector& spectrum, double omega, const Material& material,
                                 SpectrumSource source);

struct EstimateReport {
    double I1 = 0.0;
    double I2 = 0.0;
    StabilityFactor S;
    double energy_bound = 0.0;            // sqrt(I1) + S sqrt(2 I2)
    std::vector<double> residual_norms;   // |R_i|^2
    std::vector<double> eta_a;            // energy indicators
    std::optional<GoalIndicators> goal;
    std::optional<std::vector<double>> tau_a;
    double solution_energy_norm = 0.0;    // |||U^m|||
    std::optional<double> true_error;     // |||U - U^m||| when a reference is supplied
    std::optional<double> efficiency_index;

    /// sum_i eta_{a,i} = 2 I1 + 4 S^2 I2.
    double indicator_sum() const;
    /// energy_bound / |||U^m|||.
    double relative_bound() const;
    /// sqrt(sum eta_a) / |||U^m|||, the quantity the sweep drives to TOL.
    double relative_indicator_estimate() const;
};

/// A subspace whose computed modes are all retained but which is not complete
/// weights its residual by its largest computed eigenvalue, a lower bound for
/// the missing Lambda_{i,m_i+1}.
EstimateReport energy_estimate(const SubspaceResidualNorms& norms, const ModalBasis& basis, const ReducedSelection& m,
                               const StabilityFactor& S, const ReducedSolution& solution, const SparseMatrix& K,
                               const VectorC* reference = nullptr);

/// Multi-line key: value dump for debugging.
std::string to_text(const EstimateReport& report);

}  // namespace cms
