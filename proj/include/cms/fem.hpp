#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cms/mesh.hpp"
#include "cms/types.hpp"

namespace cms {

/// Isotropic linear elastic material with Rayleigh damping D = alpha K + beta M.
struct Material {
    double E = 1.0;
    double nu = 0.29;
    double rho = 1.0;
    double alpha = 0.025;
    double beta = 0.025;

    /// Shear modulus.
    double mu() const { return E / (2.0 * (1.0 + nu)); }
    /// First Lame parameter (plane strain).
    double lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
    /// Modal damping coefficient for an eigenvalue of (K, M).
    double modal_damping(double eigenvalue) const { return alpha * eigenvalue + beta; }

    void validate() const;
};

/// Free (non-clamped) displacement degrees of freedom, ordered node-major.
class DofMap {
public:
    DofMap() = default;
    explicit DofMap(const Mesh& mesh);

    int size() const { return static_cast<int>(free_.size()); }
    /// Matrix position of (node, component), or -1 for a clamped node.
    int index(int node, int component) const { return index_[2 * node + component]; }
    int node_of(int dof) const { return free_[dof].first; }
    int component_of(int dof) const { return free_[dof].second; }
    const std::vector<std::pair<int, int>>& free_dofs() const { return free_; }

private:
    std::vector<std::pair<int, int>> free_;
    std::vector<int> index_;
};

using VectorField = std::function<std::array<double, 2>(const Point&)>;

/// Body force f and Neumann traction g_N. Empty functions mean zero.
struct LoadSpec {
    VectorField body_force;
    VectorField traction;
};

/// Assembled operators on the free DOFs. K and M are exactly symmetric.
/// The damping matrix is never stored; it is alpha K + beta M.
struct FullOrderSystem {
    SparseMatrix K;
    SparseMatrix M;
    Vector b;
    DofMap dof_map;
    Material material;

    int size() const { return static_cast<int>(b.size()); }

    /// K + i omega (alpha K + beta M) - omega^2 M.
    SparseMatrixC response_matrix(double omega) const;
    /// (K + i omega D - omega^2 M) u.
    VectorC apply_response(double omega, const VectorC& u) const;
};

SparseMatrix assemble_stiffness(const Mesh& mesh, const Material& material, const DofMap& dofs);
SparseMatrix assemble_mass(const Mesh& mesh, const Material& material, const DofMap& dofs);
Vector assemble_load(const Mesh& mesh, const LoadSpec& load, const DofMap& dofs);

/// Element matrices in local ordering (u0x, u0y, u1x, u1y, u2x, u2y).
Eigen::Matrix<double, 6, 6> element_stiffness(const std::array<Point, 3>& vertices, const Material& material);
Eigen::Matrix<double, 6, 6> element_mass(const std::array<Point, 3>& vertices, const Material& material);

FullOrderSystem assemble_system(const Mesh& mesh, const Material& material, const LoadSpec& load);

/// Values of a vector field at the free nodes, laid out like the free DOFs.
Vector interpolate(const Mesh& mesh, const DofMap& dofs, const VectorField& field);

/// Solves (K + i omega D - omega^2 M) U = rhs. Throws ResonanceError when the
/// system is singular. Relative residual is at most 1e-10.
VectorC solve_full_response(const FullOrderSystem& sys, double omega, const Vector& rhs);
inline VectorC solve_full_response(const FullOrderSystem& sys, double omega) {
    return solve_full_response(sys, omega, sys.b);
}

/// sqrt(v^H K v).
double energy_norm(const SparseMatrix& K, const VectorC& v);
double energy_norm(const SparseMatrix& K, const Vector& v);

/// |rhs - (K + i omega D - omega^2 M) u| / |rhs| in the 2-norm.
double relative_residual(const FullOrderSystem& sys, double omega, const VectorC& u, const Vector& rhs);

}  // namespace cms
