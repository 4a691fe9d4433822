#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cms/estimation.hpp"
#include "cms/problem.hpp"

namespace cms {

/// How the tolerance TOL^2 is shared between subspaces in the sweep strategy.
enum class ToleranceShare {
    UnresolvedSubspaces,  // subspaces with m_i < k_i, interface included
    Subdomains,           // the number of subdomains n
};

struct AdaptConfig {
    int nmodes = 200;
    int nits = 10;
    double tol = 0.1;
    /// Per-subspace scales for the sweep strategy, one entry or one per subspace.
    std::vector<int> add{10};
    std::vector<int> remove{10};
    /// Per-subspace caps M_i; empty means the precomputed counts k_i.
    std::vector<int> caps;
    /// Starting selection; empty means one mode per subspace.
    std::vector<int> initial;
    int max_inner = 50;
    ToleranceShare tol_share = ToleranceShare::UnresolvedSubspaces;

    /// Goal-oriented runs: extra modes per subspace for the dual, or the exact dual with full tails.
    int dual_depth = 10;
    bool exact_dual = false;
    /// Stability factor from the full spectrum instead of the reduced one.
    bool full_spectrum_s = false;
    /// Compare against a full-order solve at each iteration.
    bool reference = true;

    void validate(int num_subspaces) const;
};

enum class Termination { budget_exhausted, tolerance_met, non_resolvable, max_iterations, failed };

const char* to_string(Termination t);

struct AdaptIteration {
    ReducedSelection m;
    int dofs = 0;
    double estimate = 0.0;               // sum eta_J, energy bound, or sqrt(sum eta_a)
    std::optional<double> error;         // |H(E)| or |||E|||
    double relative_estimate = 0.0;      // estimate / |||U^m||| for energy runs
    std::optional<double> relative_error;
    EstimateReport report;
    std::vector<int> change;             // applied additions (or signed deltas)
};

struct AdaptTrace {
    std::vector<AdaptIteration> iterations;
    Termination termination = Termination::max_iterations;
    double omega = 0.0;
    std::string message;

    const AdaptIteration& last() const { return iterations.back(); }
    /// sqrt(sum eta_a) / |||E||| at the final iteration, when a reference was used.
    std::optional<double> efficiency_index() const;
};

/// l_i = floor(eta_i / sum(eta) * nmodes / nits). All zeros if sum(eta) = 0.
std::vector<int> refine_counts(const std::vector<double>& eta, int nmodes, int nits);

/// Signed mode-count changes of the sweep strategy, clamped so that
/// 1 <= m_i + delta_i <= caps_i.
std::vector<int> sweep_counts(const std::vector<double>& tau, const std::vector<int>& add,
                              const std::vector<int>& remove, const std::vector<int>& caps,
                              const std::vector<int>& m);

/// tau_i = eta_i / |||U^m|||^2 - tol^2 / n_share.
std::vector<double> sweep_indicators(const std::vector<double>& eta_a, double solution_energy_norm, double tol,
                                     int n_share);

/// Goal-oriented refinement for the load `rhs` and goal vector `psi`.
AdaptTrace adapt_goal(const Problem& problem, const Vector& rhs, const Vector& psi, double omega,
                      const AdaptConfig& config);

/// Energy-norm refinement.
AdaptTrace adapt_energy(const Problem& problem, const Vector& rhs, double omega, const AdaptConfig& config);

struct LoadCase {
    double omega = 0.0;
    Vector rhs;
};

/// Frequency sweep with refinement and coarsening; each case starts from the
/// previous case's final selection.
std::vector<AdaptTrace> adapt_sweep(const Problem& problem, const std::vector<LoadCase>& cases,
                                    const AdaptConfig& config);

}  // namespace cms
