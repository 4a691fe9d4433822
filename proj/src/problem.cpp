#include "cms/problem.hpp"

#include <cmath>
#include <filesystem>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cms/basis_cache.hpp"
#include "cms/eigensolver.hpp"
#include "cms/errors.hpp"

namespace cms {

std::array<double, 2> GaussianField::operator()(const Point& x) const {
    const double dx = x.x - center.x, dy = x.y - center.y;
    const double g = amplitude * std::exp(-sharpness * (dx * dx + dy * dy));
    return {g * direction[0], g * direction[1]};
}

VectorField GaussianField::field() const {
    return [f = *this](const Point& x) { return f(x); };
}

LoadSpec make_load(const std::optional<GaussianField>& traction, const std::optional<GaussianField>& body_force) {
    LoadSpec load;
    if (traction) load.traction = traction->field();
    if (body_force) load.body_force = body_force->field();
    return load;
}

Vector Problem::load_vector(const std::optional<GaussianField>& traction,
                            const std::optional<GaussianField>& body_force) const {
    return assemble_load(mesh, make_load(traction, body_force), system.dof_map);
}

Vector Problem::goal_vector(const GaussianField& psi) const { return interpolate(mesh, system.dof_map, psi.field()); }

std::vector<int> requested_counts(const std::vector<int>& caps, const DofPartition& partition) {
    const int ns = partition.num_subspaces();
    std::vector<int> counts(ns);
    if (!caps.empty() && caps.size() != 1 && static_cast<int>(caps.size()) != ns)
        throw InvalidArgument(fmt::format("mode caps: expected 1 or {} entries, got {}", ns, caps.size()));
    for (int s = 0; s < ns; ++s) {
        const int dim = static_cast<int>(partition.dofs(s).size());
        int cap = dim;
        if (caps.size() == 1) cap = caps[0];
        if (static_cast<int>(caps.size()) == ns) cap = caps[s];
        if (cap < 1) throw InvalidArgument(fmt::format("mode cap for subspace {} must be >= 1", s));
        counts[s] = std::min(cap, dim);
    }
    return counts;
}

Problem build_problem(const ProblemSpec& spec, const std::string& cache_dir) {
    spec.material.validate();
    Problem p;
    p.spec = spec;
    p.mesh = build_rect_mesh(spec.width, spec.height, spec.nx, spec.ny, spec.grid,
                             spec.clamp_right ? clamp_left_right(spec.width) : clamp_left());
    p.system = assemble_system(p.mesh, spec.material, make_load(spec.traction, spec.body_force));
    p.partition = classify_dofs(p.mesh, p.system.dof_map);
    p.extension = std::make_shared<const ExtensionOperator>(p.system.K, p.partition);
    const auto counts = requested_counts(spec.mode_caps, p.partition);

    std::string cache_file;
    std::uint64_t key = 0;
    if (!cache_dir.empty()) {
        key = basis_cache_key(p.mesh, spec.material, p.partition, counts, spec.basis_options);
        cache_file = basis_cache_path(cache_dir, key);
        if (auto cached = load_basis(cache_file, key, p.partition, *p.extension, p.system.K, p.system.M)) {
            spdlog::info("modal basis loaded from {}", cache_file);
            p.basis = std::make_shared<const ModalBasis>(std::move(*cached));
            return p;
        }
    }
    p.basis = std::make_shared<const ModalBasis>(
        compute_modal_basis(p.system.K, p.system.M, p.partition, *p.extension, counts, spec.basis_options));
    if (!cache_file.empty()) {
        save_basis(cache_file, key, *p.basis);
        spdlog::info("modal basis written to {}", cache_file);
    }
    return p;
}

Vector full_spectrum(const FullOrderSystem& system) {
    return all_eigenvalues(Matrix(system.K), Matrix(system.M));
}

}  // namespace cms
