#include "cms/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cms/errors.hpp"

namespace cms {

AlgebraicResidual algebraic_residual(const FullOrderSystem& system, const ReducedSolution& solution) {
    return algebraic_residual(system, solution, system.b);
}

AlgebraicResidual algebraic_residual(const FullOrderSystem& system, const ReducedSolution& solution,
                                     const Vector& rhs) {
    AlgebraicResidual res;
    res.omega = solution.omega();
    res.r = rhs.cast<Complex>() - system.apply_response(solution.omega(), solution.full_expansion());
    const VectorC projected = solution.model().restrict(res.r);
    const double scale = rhs.norm();
    const double worst = projected.size() ? projected.cwiseAbs().maxCoeff() : 0.0;
    res.galerkin_violation = scale > 0.0 ? worst / scale : worst;
    return res;
}

std::vector<int> default_depth(const ModalBasis& basis, const ReducedSelection& m, int extra) {
    std::vector<int> d(basis.num_subspaces());
    for (int s = 0; s < basis.num_subspaces(); ++s) d[s] = std::min(m.m[s] + extra, basis.count(s));
    return d;
}

std::vector<int> full_depth(const ModalBasis& basis) { return basis.counts(); }

SubspaceResidualNorms subspace_residual_norms(const AlgebraicResidual& residual, const ModalBasis& basis,
                                              const ReducedSelection& m, const std::vector<int>& depth) {
    const int ns = basis.num_subspaces();
    if (static_cast<int>(depth.size()) != ns) throw InvalidArgument("depth has wrong number of entries");
    SubspaceResidualNorms out;
    out.m = m.m;
    out.depth = depth;
    out.squared.assign(ns, 0.0);
    for (int s = 0; s < ns; ++s) {
        const int d = std::min(depth[s], basis.count(s));
        const int len = d - m.m[s];
        if (len <= 0) continue;
        out.squared[s] = basis.project(s, residual.r, m.m[s], len).squaredNorm();
    }
    return out;
}

struct CompleteResidualNorms::Impl {
    DofPartition partition;
    Matrix E;
    Eigen::LLT<Matrix> interface_gram;
    std::vector<std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>>> interior;
};

CompleteResidualNorms::CompleteResidualNorms(const SparseMatrix& M, const DofPartition& partition,
                                             const ExtensionOperator& extension)
    : impl_(std::make_unique<Impl>()) {
    impl_->partition = partition;
    impl_->E = extension.matrix();
    if (impl_->E.cols() > 0) {
        Matrix T = impl_->E.transpose() * (M * impl_->E);
        T = 0.5 * (T + T.transpose()).eval();
        impl_->interface_gram.compute(T);
        if (impl_->interface_gram.info() != Eigen::Success)
            throw InternalError("interface mass Gram matrix is not positive definite");
    }
    for (int s = 1; s < partition.num_subspaces(); ++s) {
        auto llt = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(principal_block(M, partition.dofs(s)));
        if (llt->info() != Eigen::Success)
            throw InternalError(fmt::format("interior mass block of subdomain {} is not positive definite", s));
        impl_->interior.push_back(std::move(llt));
    }
}

CompleteResidualNorms::~CompleteResidualNorms() = default;
CompleteResidualNorms::CompleteResidualNorms(CompleteResidualNorms&&) noexcept = default;

std::vector<double> CompleteResidualNorms::totals(const VectorC& r) const {
    const auto& part = impl_->partition;
    std::vector<double> out(part.num_subspaces(), 0.0);
    if (impl_->E.cols() > 0) {
        const VectorC g = impl_->E.transpose().cast<Complex>() * r;
        const VectorC x = impl_->interface_gram.solve(Matrix(g.real())).cast<Complex>() +
                          Complex(0.0, 1.0) * impl_->interface_gram.solve(Matrix(g.imag())).cast<Complex>();
        out[0] = std::max(0.0, g.dot(x).real());
    }
    for (int s = 1; s < part.num_subspaces(); ++s) {
        const auto& idx = part.dofs(s);
        Vector re(idx.size()), im(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            re[j] = r[idx[j]].real();
            im[j] = r[idx[j]].imag();
        }
        const auto& llt = *impl_->interior[s - 1];
        out[s] = std::max(0.0, re.dot(llt.solve(re)) + im.dot(llt.solve(im)));
    }
    return out;
}

SubspaceResidualNorms CompleteResidualNorms::operator()(const AlgebraicResidual& residual, const ModalBasis& basis,
                                                        const ReducedSelection& m) const {
    SubspaceResidualNorms out;
    out.m = m.m;
    out.squared = totals(residual.r);
    for (int s = 0; s < basis.num_subspaces(); ++s) {
        out.depth.push_back(basis.dimension(s));
        if (m.m[s] > 0) out.squared[s] = std::max(0.0, out.squared[s] - basis.project(s, residual.r, 0, m.m[s]).squaredNorm());
    }
    return out;
}

Vector goal_load(const FullOrderSystem& system, const Vector& psi) {
    if (psi.size() != system.size()) throw InvalidArgument("goal vector size does not match system");
    return system.M * psi;
}

Complex goal_value(const FullOrderSystem& system, const Vector& psi, const VectorC& u) {
    const Vector h = goal_load(system, psi);
    return h.cast<Complex>().transpose() * u;
}

VectorC solve_dual(const FullOrderSystem& system, const Vector& psi, double omega) {
    return solve_full_response(system, omega, goal_load(system, psi));
}

VectorC solve_dual(const FullOrderSystem& system, const ModalBasis& basis, const Vector& psi, double omega,
                   const ReducedSelection& depth) {
    const ReducedModel model = project(system, basis, depth, goal_load(system, psi));
    return solve_reduced(model, omega, system.material).full_expansion();
}

GoalIndicators goal_indicators(const SparseMatrix& K, const AlgebraicResidual& residual, const VectorC& phi,
                               const ModalBasis& basis, const ReducedSelection& m, const std::vector<int>& depth) {
    const int ns = basis.num_subspaces();
    if (static_cast<int>(depth.size()) != ns) throw InvalidArgument("depth has wrong number of entries");
    const VectorC Kphi = K * phi;
    GoalIndicators out;
    out.eta.assign(ns, 0.0);
    out.signed_sums.assign(ns, Complex(0.0, 0.0));
    for (int s = 0; s < ns; ++s) {
        const int d = std::min(depth[s], basis.count(s));
        const int len = d - m.m[s];
        if (len <= 0) continue;
        const VectorC rt = basis.project(s, residual.r, m.m[s], len);
        const VectorC pt = basis.project(s, Kphi, m.m[s], len);
        Complex sum(0.0, 0.0);
        for (int j = 0; j < len; ++j) sum += rt[j] * pt[j] / basis.eigenvalue(s, m.m[s] + j);
        out.signed_sums[s] = sum;
        out.eta[s] = std::abs(sum);
        out.signed_total += sum;
        out.estimate += out.eta[s];
    }
    return out;
}

StabilityFactor stability_factor(const Vector& spectrum, double omega, const Material& material,
                                 SpectrumSource source) {
    if (spectrum.size() == 0) throw InvalidArgument("stability factor needs a nonempty spectrum");
    StabilityFactor sf;
    sf.omega = omega;
    sf.source = source;
    sf.spectrum_used.assign(spectrum.data(), spectrum.data() + spectrum.size());
    const double w2 = omega * omega;
    double best = 0.0;
    for (double lam : sf.spectrum_used) {
        if (!(lam > 0.0)) throw InvalidArgument("stability factor needs a positive spectrum");
        const double c = material.modal_damping(lam);
        const double num = (w2 * w2 + w2 * c * c) * lam;
        const double den = (lam - w2) * (lam - w2) + w2 * c * c;
        const double value = num == 0.0 ? 0.0 : (den > 0.0 ? std::sqrt(num / den) : std::numeric_limits<double>::infinity());
        best = std::max(best, value);
    }
    sf.S = best;
    return sf;
}

double EstimateReport::indicator_sum() const {
    double sum = 0.0;
    for (double e : eta_a) sum += e;
    return sum;
}

double EstimateReport::relative_bound() const {
    return solution_energy_norm > 0.0 ? energy_bound / solution_energy_norm : std::numeric_limits<double>::infinity();
}

double EstimateReport::relative_indicator_estimate() const {
    return solution_energy_norm > 0.0 ? std::sqrt(indicator_sum()) / solution_energy_norm
                                      : std::numeric_limits<double>::infinity();
}

EstimateReport energy_estimate(const SubspaceResidualNorms& norms, const ModalBasis& basis, const ReducedSelection& m,
                               const StabilityFactor& S, const ReducedSolution& solution, const SparseMatrix& K,
                               const VectorC* reference) {
    const int ns = basis.num_subspaces();
    EstimateReport rep;
    rep.S = S;
    rep.residual_norms = norms.squared;
    rep.eta_a.assign(ns, 0.0);
    const double S2 = S.S * S.S;
    for (int s = 0; s < ns; ++s) {
        if (m.m[s] >= basis.dimension(s)) continue;  // complete subspace, no residual
        double lam;
        if (m.m[s] < basis.count(s)) {
            lam = basis.eigenvalue(s, m.m[s]);  // Lambda_{s, m_s + 1}
        } else {
            // Lambda_{s, m_s + 1} was never computed; the largest computed one is a lower bound for it
            if (basis.count(s) == 0) continue;
            lam = basis.eigenvalue(s, basis.count(s) - 1);
            if (norms.squared[s] > 0.0)
                spdlog::debug("subspace {} uses all {} computed modes; weighting its residual by Lambda_{}", s,
                              basis.count(s), basis.count(s));
        }
        const double r2 = norms.squared[s];
        rep.I1 += r2 / lam;
        rep.I2 += r2 / (lam * lam);
        rep.eta_a[s] = 2.0 * r2 / lam + 4.0 * S2 * r2 / (lam * lam);
    }
    rep.energy_bound = std::sqrt(rep.I1) + S.S * std::sqrt(2.0 * rep.I2);
    rep.solution_energy_norm = energy_norm(K, solution.full_expansion());
    if (reference) {
        rep.true_error = energy_norm(K, VectorC(*reference - solution.full_expansion()));
        if (*rep.true_error > 0.0) rep.efficiency_index = rep.energy_bound / *rep.true_error;
    }
    return rep;
}

std::string to_text(const EstimateReport& r) {
    std::string out;
    const auto list = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.17g}", i ? ", " : "", v[i]);
        return s + "]";
    };
    out += fmt::format("I1: {:.17g}\n", r.I1);
    out += fmt::format("I2: {:.17g}\n", r.I2);
    out += fmt::format("omega: {:.17g}\n", r.S.omega);
    out += fmt::format("stability_factor: {:.17g}\n", r.S.S);
    out += fmt::format("stability_spectrum: {} ({} values)\n",
                       r.S.source == SpectrumSource::FullSpectrum ? "full" : "reduced", r.S.spectrum_used.size());
    out += fmt::format("energy_bound: {:.17g}\n", r.energy_bound);
    out += fmt::format("residual_norms_squared: {}\n", list(r.residual_norms));
    out += fmt::format("eta_a: {}\n", list(r.eta_a));
    if (r.goal) out += fmt::format("eta_J: {}\n", list(r.goal->eta));
    if (r.tau_a) out += fmt::format("tau_a: {}\n", list(*r.tau_a));
    out += fmt::format("solution_energy_norm: {:.17g}\n", r.solution_energy_norm);
    if (r.true_error) out += fmt::format("true_error: {:.17g}\n", *r.true_error);
    if (r.efficiency_index) out += fmt::format("efficiency_index: {:.17g}\n", *r.efficiency_index);
    return out;
}

}  // namespace cms
