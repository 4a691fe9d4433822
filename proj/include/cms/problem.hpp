#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cms/decomposition.hpp"
#include "cms/fem.hpp"
#include "cms/mesh.hpp"

namespace cms {

/// amplitude * direction * exp(-sharpness |x - center|^2).
struct GaussianField {
    Point center;
    std::array<double, 2> direction{0.0, -1.0};
    double amplitude = 1.0;
    double sharpness = 100.0;

    std::array<double, 2> operator()(const Point& x) const;
    VectorField field() const;
};

struct ProblemSpec {
    double width = 1.0;
    double height = 1.0;
    int nx = 12;
    int ny = 12;
    SubdomainGrid grid{3, 2};
    /// Also clamp the edge x = width.
    bool clamp_right = false;
    Material material;
    std::optional<GaussianField> traction;
    std::optional<GaussianField> body_force;
    /// Precomputed modes per subspace (M_i). Empty means every mode; a single
    /// entry applies to all subspaces.
    std::vector<int> mode_caps;
    ModalBasisOptions basis_options;
};

/// Everything a reduced solve needs, built once per mesh and material.
struct Problem {
    ProblemSpec spec;
    Mesh mesh;
    FullOrderSystem system;
    DofPartition partition;
    std::shared_ptr<const ExtensionOperator> extension;
    std::shared_ptr<const ModalBasis> basis;

    int num_subspaces() const { return partition.num_subspaces(); }
    /// Load vector for another traction / body force on the same mesh.
    Vector load_vector(const std::optional<GaussianField>& traction,
                       const std::optional<GaussianField>& body_force = std::nullopt) const;
    /// Nodal interpolant of a goal field on the free DOFs.
    Vector goal_vector(const GaussianField& psi) const;
};

/// Mode counts requested per subspace after expanding `caps`.
std::vector<int> requested_counts(const std::vector<int>& caps, const DofPartition& partition);

LoadSpec make_load(const std::optional<GaussianField>& traction, const std::optional<GaussianField>& body_force);

/// Builds the mesh, system, partition, extension and modal basis. When
/// `cache_dir` is nonempty the modal basis is read from and written to it.
Problem build_problem(const ProblemSpec& spec, const std::string& cache_dir = "");

/// All eigenvalues of (K, M), dense. Only sensible on small meshes.
Vector full_spectrum(const FullOrderSystem& system);

}  // namespace cms
