#include "cms/reduced_model.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cms/eigensolver.hpp"
#include "cms/errors.hpp"

namespace cms {

int ReducedModel::offset(int s) const {
    int off = 0;
    for (int t = 0; t < s; ++t) off += selection.m[t];
    return off;
}

VectorC ReducedModel::expand(const VectorC& coeffs) const {
    VectorC full = VectorC::Zero(basis->full_size());
    int off = 0;
    for (int s = 0; s < basis->num_subspaces(); ++s) {
        const int m = selection.m[s];
        if (m > 0) full += basis->combine(s, coeffs.segment(off, m), 0);
        off += m;
    }
    return full;
}

VectorC ReducedModel::restrict(const VectorC& w) const {
    VectorC out(size());
    int off = 0;
    for (int s = 0; s < basis->num_subspaces(); ++s) {
        const int m = selection.m[s];
        if (m > 0) out.segment(off, m) = basis->project(s, w, 0, m);
        off += m;
    }
    return out;
}

Matrix ReducedModel::basis_matrix() const {
    Matrix V(basis->full_size(), size());
    int off = 0;
    for (int s = 0; s < basis->num_subspaces(); ++s) {
        const int m = selection.m[s];
        if (m > 0) V.middleCols(off, m) = basis->lift(s, 0, m);
        off += m;
    }
    return V;
}

ReducedSolution::ReducedSolution(const ReducedModel& model, VectorC coefficients, double omega)
    : model_(std::make_shared<const ReducedModel>(model)),
      coefficients_(std::move(coefficients)),
      omega_(omega),
      cache_(std::make_shared<Cache>()) {}

const VectorC& ReducedSolution::full_expansion() const {
    std::call_once(cache_->once, [this] { cache_->full = model_->expand(coefficients_); });
    return cache_->full;
}

ReducedModel project(const FullOrderSystem& system, const ModalBasis& basis, const ReducedSelection& selection) {
    return project(system, basis, selection, system.b);
}

ReducedModel project(const FullOrderSystem& system, const ModalBasis& basis, const ReducedSelection& selection,
                     const Vector& rhs) {
    selection.validate(basis);
    if (rhs.size() != system.size()) throw InvalidArgument("projection: load vector size does not match system");
    ReducedModel model;
    model.selection = selection;
    model.basis = &basis;
    const int ns = basis.num_subspaces();
    const int N = selection.total();
    model.Km.resize(N);
    model.Mm = Matrix::Zero(N, N);
    model.Kc = Matrix::Zero(N, N);
    model.bm.resize(N);

    std::vector<int> offsets(ns, 0);
    for (int s = 1; s < ns; ++s) offsets[s] = offsets[s - 1] + selection.m[s - 1];
    for (int s = 0; s < ns; ++s) {
        const int m = selection.m[s];
        for (int j = 0; j < m; ++j) {
            model.mode_index.emplace_back(s, j);
            model.Km[offsets[s] + j] = basis.eigenvalue(s, j);
        }
        if (m == 0) continue;
        model.bm.segment(offsets[s], m) = basis.project(s, rhs, 0, m);
        model.Mm.block(offsets[s], offsets[s], m, m) = basis.mass_block(s, s, m, m);
        model.Kc.block(offsets[s], offsets[s], m, m) = basis.stiffness_block(s, s, m, m);
        if (s > 0 && selection.m[0] > 0) {
            const Matrix coupling = basis.mass_block(0, s, selection.m[0], m);
            model.Mm.block(offsets[0], offsets[s], selection.m[0], m) = coupling;
            model.Mm.block(offsets[s], offsets[0], m, selection.m[0]) = coupling.transpose();
            const Matrix kcoupling = basis.stiffness_block(0, s, selection.m[0], m);
            model.Kc.block(offsets[0], offsets[s], selection.m[0], m) = kcoupling;
            model.Kc.block(offsets[s], offsets[0], m, selection.m[0]) = kcoupling.transpose();
        }
    }
    return model;
}

namespace {

MatrixC reduced_response(const ReducedModel& model, double omega, const Material& material) {
    const Complex ck(1.0, omega * material.alpha);
    const Complex cm(-omega * omega, omega * material.beta);
    return ck * model.Kc.cast<Complex>() + cm * model.Mm.cast<Complex>();
}

}  // namespace

double reduced_residual(const ReducedModel& model, double omega, const Material& material, const VectorC& u) {
    const VectorC f = model.bm.cast<Complex>();
    const double scale = f.norm();
    const double res = (f - reduced_response(model, omega, material) * u).norm();
    return scale > 0.0 ? res / scale : res;
}

ReducedSolution solve_reduced(const ReducedModel& model, double omega, const Material& material) {
    if (!(omega >= 0.0)) throw InvalidArgument(fmt::format("frequency must be >= 0, got {}", omega));
    if (model.size() == 0) throw InvalidArgument("empty reduced model");
    const MatrixC A = reduced_response(model, omega, material);
    const VectorC f = model.bm.cast<Complex>();
    Eigen::PartialPivLU<MatrixC> lu(A);

    const auto resonance = [&]() {
        const Vector ev = reduced_eigenvalues(model);
        double nearest = ev.size() ? ev[0] : std::nan("");
        for (Eigen::Index j = 0; j < ev.size(); ++j)
            if (std::abs(ev[j] - omega * omega) < std::abs(nearest - omega * omega)) nearest = ev[j];
        return ResonanceError(
            fmt::format("reduced system is singular at omega^2={} (nearest reduced eigenvalue {})", omega * omega,
                        nearest),
            omega, nearest);
    };
    if (!(lu.rcond() > 1e-14)) throw resonance();

    VectorC u = lu.solve(f);
    for (int it = 0; it < 3; ++it) {
        const VectorC res = f - A * u;
        if (res.norm() <= 1e-13 * f.norm()) break;
        u += lu.solve(res);
    }
    if (!u.allFinite()) throw resonance();
    return ReducedSolution(model, std::move(u), omega);
}

Vector reduced_eigenvalues(const ReducedModel& model) {
    Matrix Kd = model.Km.asDiagonal();
    try {
        return all_eigenvalues(Kd, model.Mm);
    } catch (const EigenSolverError& e) {
        throw EigenSolverError(fmt::format("reduced eigenvalue problem: {}", e.what()), -1, e.residual());
    }
}

}  // namespace cms
