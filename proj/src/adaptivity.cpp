#include "cms/adaptivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cms/errors.hpp"

namespace cms {

namespace {

std::vector<int> per_subspace(const std::vector<int>& v, int ns, int fallback, const char* what) {
    if (v.empty()) return std::vector<int>(ns, fallback);
    if (v.size() == 1) return std::vector<int>(ns, v[0]);
    if (static_cast<int>(v.size()) != ns)
        throw InvalidArgument(fmt::format("{}: expected 1 or {} entries, got {}", what, ns, v.size()));
    return v;
}

/// Effective caps min(M_i, k_i).
std::vector<int> effective_caps(const AdaptConfig& cfg, const ModalBasis& basis) {
    const int ns = basis.num_subspaces();
    std::vector<int> caps = cfg.caps.empty() ? basis.counts() : per_subspace(cfg.caps, ns, 0, "caps");
    for (int s = 0; s < ns; ++s) caps[s] = std::min(caps[s], basis.count(s));
    return caps;
}

ReducedSelection initial_selection(const AdaptConfig& cfg, const ModalBasis& basis, const std::vector<int>& caps) {
    const int ns = basis.num_subspaces();
    ReducedSelection m{per_subspace(cfg.initial, ns, 1, "initial")};
    for (int s = 0; s < ns; ++s) m.m[s] = std::clamp(m.m[s], caps[s] > 0 ? 1 : 0, caps[s]);
    return m;
}

struct Reference {
    std::optional<VectorC> U;
    std::optional<Vector> spectrum;
};

Reference make_reference(const Problem& problem, const Vector& rhs, double omega, const AdaptConfig& cfg,
                         const std::optional<Vector>& spectrum) {
    Reference ref;
    if (cfg.reference) ref.U = solve_full_response(problem.system, omega, rhs);
    ref.spectrum = spectrum;
    return ref;
}

StabilityFactor stability_for(const ReducedSolution& sol, const Problem& problem, const Reference& ref) {
    if (ref.spectrum)
        return stability_factor(*ref.spectrum, sol.omega(), problem.system.material, SpectrumSource::FullSpectrum);
    return stability_factor(reduced_eigenvalues(sol.model()), sol.omega(), problem.system.material,
                            SpectrumSource::ReducedSpectrum);
}

struct Evaluation {
    ReducedSolution solution;
    AlgebraicResidual residual;
    EstimateReport report;
};

Evaluation evaluate_energy(const Problem& problem, const Vector& rhs, double omega, const ReducedSelection& m,
                           const Reference& ref, const CompleteResidualNorms* complete) {
    const auto& basis = *problem.basis;
    const ReducedModel model = project(problem.system, basis, m, rhs);
    Evaluation ev{solve_reduced(model, omega, problem.system.material), {}, {}};
    ev.residual = algebraic_residual(problem.system, ev.solution, rhs);
    if (ev.residual.galerkin_violation > 1e-10)
        spdlog::warn("Galerkin orthogonality violated: {:.3e}", ev.residual.galerkin_violation);
    const SubspaceResidualNorms norms =
        complete ? (*complete)(ev.residual, basis, m) : subspace_residual_norms(ev.residual, basis, m, full_depth(basis));
    const StabilityFactor S = stability_for(ev.solution, problem, ref);
    ev.report = energy_estimate(norms, basis, m, S, ev.solution, problem.system.K, ref.U ? &*ref.U : nullptr);
    return ev;
}

bool all_zero(const std::vector<int>& v) {
    return std::all_of(v.begin(), v.end(), [](int x) { return x == 0; });
}

/// Shared loop of the goal-oriented and energy refinement algorithms.
template <class Step>
AdaptTrace refine_loop(const Problem& problem, double omega, const AdaptConfig& cfg, Step&& step) {
    const auto& basis = *problem.basis;
    cfg.validate(basis.num_subspaces());
    const auto caps = effective_caps(cfg, basis);
    AdaptTrace trace;
    trace.omega = omega;
    ReducedSelection m = initial_selection(cfg, basis, caps);
    try {
        for (int it = 1; it <= cfg.nits; ++it) {
            std::vector<double> eta;
            AdaptIteration rec = step(m, eta);
            rec.m = m;
            rec.dofs = m.total();
            spdlog::info("iteration {}: dofs {} estimate {:.6e}{}", it, rec.dofs, rec.estimate,
                         rec.error ? fmt::format(" error {:.6e}", *rec.error) : std::string());
            trace.iterations.push_back(std::move(rec));
            if (it == cfg.nits) {
                trace.termination = Termination::budget_exhausted;
                break;
            }
            const auto l = refine_counts(eta, cfg.nmodes, cfg.nits);
            if (std::accumulate(eta.begin(), eta.end(), 0.0) == 0.0) {
                trace.termination = Termination::tolerance_met;
                trace.message = "all indicators are zero";
                break;
            }
            std::vector<int> applied(l.size(), 0);
            for (std::size_t s = 0; s < l.size(); ++s) {
                const int next = std::min(m.m[s] + l[s], caps[s]);
                applied[s] = next - m.m[s];
                m.m[s] = next;
            }
            trace.iterations.back().change = applied;
            if (all_zero(applied)) {
                trace.termination = Termination::non_resolvable;
                trace.message = "no subspace can be enriched";
                break;
            }
        }
    } catch (const Error& e) {
        trace.termination = Termination::failed;
        trace.message = e.what();
        spdlog::error("adaptive run aborted: {}", e.what());
    }
    return trace;
}

}  // namespace

void AdaptConfig::validate(int ns) const {
    if (nmodes < 1) throw InvalidArgument("NMODES must be >= 1");
    if (nits < 1) throw InvalidArgument("NITS must be >= 1");
    if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument(fmt::format("TOL must lie in (0, 1), got {}", tol));
    if (max_inner < 1) throw InvalidArgument("inner iteration cap must be >= 1");
    if (dual_depth < 0) throw InvalidArgument("dual depth must be >= 0");
    const auto a = per_subspace(add, ns, 1, "add");
    const auto r = per_subspace(remove, ns, 1, "remove");
    const auto c = per_subspace(caps, ns, 0, "caps");
    for (int s = 0; s < ns; ++s) {
        if (!caps.empty() && c[s] < 1) throw InvalidArgument(fmt::format("cap M_{} must be >= 1", s));
        if (a[s] < 1) throw InvalidArgument(fmt::format("A_{} must be >= 1", s));
        if (r[s] < 1) throw InvalidArgument(fmt::format("R_{} must be >= 1", s));
        if (!caps.empty() && (a[s] > c[s] || r[s] > c[s]))
            throw InvalidArgument(fmt::format("A_{} and R_{} must not exceed M_{} = {}", s, s, s, c[s]));
    }
    per_subspace(initial, ns, 1, "initial");
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::budget_exhausted: return "budget_exhausted";
        case Termination::tolerance_met: return "tolerance_met";
        case Termination::non_resolvable: return "non_resolvable";
        case Termination::max_iterations: return "max_iterations";
        case Termination::failed: return "failed";
    }
    return "unknown";
}

std::optional<double> AdaptTrace::efficiency_index() const {
    if (iterations.empty() || !last().error || !(*last().error > 0.0)) return std::nullopt;
    return last().estimate / *last().error;
}

std::vector<int> refine_counts(const std::vector<double>& eta, int nmodes, int nits) {
    if (nits < 1) throw InvalidArgument("NITS must be >= 1");
    double sum = 0.0;
    for (double e : eta) {
        if (!(e >= 0.0)) throw InvalidArgument("indicators must be nonnegative");
        sum += e;
    }
    std::vector<int> l(eta.size(), 0);
    if (sum == 0.0) return l;
    for (std::size_t i = 0; i < eta.size(); ++i) l[i] = static_cast<int>(std::floor(eta[i] / sum * nmodes / nits));
    return l;
}

std::vector<int> sweep_counts(const std::vector<double>& tau, const std::vector<int>& add,
                              const std::vector<int>& remove, const std::vector<int>& caps,
                              const std::vector<int>& m) {
    const std::size_t n = tau.size();
    if (add.size() != n || remove.size() != n || caps.size() != n || m.size() != n)
        throw InvalidArgument("sweep_counts: argument sizes differ");
    double sum = 0.0;
    for (double t : tau) sum += std::abs(t);
    std::vector<int> delta(n, 0);
    if (sum == 0.0) return delta;
    // |tau_i| / sum rather than (1 / sum) * |tau_i|: a lone nonzero tau must get a share of exactly 1
    for (std::size_t i = 0; i < n; ++i) {
        const double share = std::abs(tau[i]) / sum;
        int d = 0;
        if (tau[i] > 0.0)
            d = static_cast<int>(std::floor(share * add[i]));
        else if (tau[i] < 0.0)
            d = -static_cast<int>(std::floor(share * remove[i]));
        delta[i] = std::clamp(m[i] + d, 1, std::max(caps[i], 1)) - m[i];
    }
    return delta;
}

std::vector<double> sweep_indicators(const std::vector<double>& eta_a, double solution_energy_norm, double tol,
                                     int n_share) {
    if (n_share < 1) throw InvalidArgument("tolerance share count must be >= 1");
    const double u2 = solution_energy_norm * solution_energy_norm;
    std::vector<double> tau(eta_a.size());
    for (std::size_t i = 0; i < eta_a.size(); ++i) tau[i] = eta_a[i] / u2 - tol * tol / n_share;
    return tau;
}

AdaptTrace adapt_goal(const Problem& problem, const Vector& rhs, const Vector& psi, double omega,
                      const AdaptConfig& cfg) {
    const auto& sys = problem.system;
    const auto& basis = *problem.basis;
    std::optional<VectorC> exact_dual;
    std::optional<Reference> ref;
    const Vector h = goal_load(sys, psi);
    return refine_loop(problem, omega, cfg, [&](const ReducedSelection& m, std::vector<double>& eta) {
        if (!ref) ref = make_reference(problem, rhs, omega, cfg,
                                       cfg.full_spectrum_s ? std::optional<Vector>(full_spectrum(sys)) : std::nullopt);
        if (cfg.exact_dual && !exact_dual) exact_dual = solve_dual(sys, psi, omega);

        Evaluation ev = evaluate_energy(problem, rhs, omega, m, *ref, nullptr);
        std::vector<int> depth;
        VectorC phi;
        if (cfg.exact_dual) {
            depth = full_depth(basis);
            phi = *exact_dual;
        } else {
            depth = default_depth(basis, m, cfg.dual_depth);
            phi = solve_dual(sys, basis, psi, omega, ReducedSelection{depth});
        }
        ev.report.goal = goal_indicators(sys.K, ev.residual, phi, basis, m, depth);
        eta = ev.report.goal->eta;

        AdaptIteration rec;
        rec.estimate = ev.report.goal->estimate;
        if (ref->U) {
            const VectorC E = *ref->U - ev.solution.full_expansion();
            rec.error = std::abs(Complex(h.cast<Complex>().transpose() * E));
            const double scale = std::abs(Complex(h.cast<Complex>().transpose() * *ref->U));
            if (scale > 0.0) rec.relative_error = *rec.error / scale;
        }
        const double hm = std::abs(Complex(h.cast<Complex>().transpose() * ev.solution.full_expansion()));
        rec.relative_estimate = hm > 0.0 ? rec.estimate / hm : 0.0;
        rec.report = std::move(ev.report);
        return rec;
    });
}

AdaptTrace adapt_energy(const Problem& problem, const Vector& rhs, double omega, const AdaptConfig& cfg) {
    std::optional<Reference> ref;
    return refine_loop(problem, omega, cfg, [&](const ReducedSelection& m, std::vector<double>& eta) {
        if (!ref) ref = make_reference(problem, rhs, omega, cfg,
                                       cfg.full_spectrum_s ? std::optional<Vector>(full_spectrum(problem.system))
                                                           : std::nullopt);
        Evaluation ev = evaluate_energy(problem, rhs, omega, m, *ref, nullptr);
        eta = ev.report.eta_a;
        AdaptIteration rec;
        rec.estimate = ev.report.energy_bound;
        rec.relative_estimate = ev.report.relative_bound();
        rec.error = ev.report.true_error;
        if (ref->U && rec.error) rec.relative_error = *rec.error / energy_norm(problem.system.K, *ref->U);
        rec.report = std::move(ev.report);
        return rec;
    });
}

std::vector<AdaptTrace> adapt_sweep(const Problem& problem, const std::vector<LoadCase>& cases,
                                    const AdaptConfig& cfg) {
    const auto& basis = *problem.basis;
    const int ns = basis.num_subspaces();
    cfg.validate(ns);
    const auto caps = effective_caps(cfg, basis);
    const auto add = per_subspace(cfg.add, ns, 1, "add");
    const auto remove = per_subspace(cfg.remove, ns, 1, "remove");
    const CompleteResidualNorms complete(problem.system.M, problem.partition, *problem.extension);
    const std::optional<Vector> spectrum =
        cfg.full_spectrum_s ? std::optional<Vector>(full_spectrum(problem.system)) : std::nullopt;

    std::vector<AdaptTrace> traces;
    ReducedSelection m = initial_selection(cfg, basis, caps);
    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto& lc = cases[c];
        AdaptTrace trace;
        trace.omega = lc.omega;
        try {
            const Reference ref = make_reference(problem, lc.rhs, lc.omega, cfg, spectrum);
            const double u_norm = ref.U ? energy_norm(problem.system.K, *ref.U) : 0.0;
            for (int it = 1;; ++it) {
                Evaluation ev = evaluate_energy(problem, lc.rhs, lc.omega, m, ref, &complete);
                int n_share = ns - 1;
                if (cfg.tol_share == ToleranceShare::UnresolvedSubspaces) {
                    n_share = 0;
                    for (int s = 0; s < ns; ++s) n_share += m.m[s] < basis.dimension(s) ? 1 : 0;
                }
                const auto tau = sweep_indicators(ev.report.eta_a, ev.report.solution_energy_norm, cfg.tol,
                                                  std::max(n_share, 1));
                ev.report.tau_a = tau;

                AdaptIteration rec;
                rec.m = m;
                rec.dofs = m.total();
                rec.estimate = std::sqrt(ev.report.indicator_sum());
                rec.relative_estimate = ev.report.relative_indicator_estimate();
                rec.error = ev.report.true_error;
                if (rec.error && u_norm > 0.0) rec.relative_error = *rec.error / u_norm;
                rec.report = std::move(ev.report);
                const double rel = rec.relative_estimate;
                trace.iterations.push_back(std::move(rec));

                if (rel <= cfg.tol) {
                    trace.termination = Termination::tolerance_met;
                    break;
                }
                const auto top = std::max_element(tau.begin(), tau.end());
                const int j = static_cast<int>(top - tau.begin());
                const bool unique_top =
                    std::count_if(tau.begin(), tau.end(), [&](double t) { return t == *top; }) == 1;
                if (*top > 0.0 && unique_top && m.m[j] >= caps[j]) {
                    trace.termination = Termination::non_resolvable;
                    trace.message = fmt::format("subspace {} holds the largest indicator at its cap {}", j, caps[j]);
                    break;
                }
                if (it >= cfg.max_inner) {
                    trace.termination = Termination::max_iterations;
                    break;
                }
                const auto delta = sweep_counts(tau, add, remove, caps, m.m);
                trace.iterations.back().change = delta;
                if (all_zero(delta)) {
                    trace.termination = Termination::non_resolvable;
                    trace.message = "strategy makes no progress";
                    break;
                }
                for (int s = 0; s < ns; ++s) m.m[s] += delta[s];
            }
        } catch (const Error& e) {
            trace.termination = Termination::failed;
            trace.message = e.what();
            spdlog::error("load case {} (omega^2 = {}) failed: {}", c, lc.omega * lc.omega, e.what());
        }
        spdlog::info("case {}: omega^2 {:.4g} its {} dofs {} {}", c, lc.omega * lc.omega, trace.iterations.size(),
                     trace.iterations.empty() ? 0 : trace.last().dofs, to_string(trace.termination));
        traces.push_back(std::move(trace));
    }
    return traces;
}

}  // namespace cms
