#include "cms/fem.hpp"

#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "cms/errors.hpp"

namespace cms {

void Material::validate() const {
    if (!(E > 0.0)) throw InvalidArgument(fmt::format("Young modulus must be positive, got {}", E));
    if (!(nu >= 0.0 && nu < 0.5)) throw InvalidArgument(fmt::format("Poisson ratio must lie in [0, 0.5), got {}", nu));
    if (!(rho > 0.0)) throw InvalidArgument(fmt::format("density must be positive, got {}", rho));
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw InvalidArgument(fmt::format("damping coefficients must be >= 0, got alpha={} beta={}", alpha, beta));
}

DofMap::DofMap(const Mesh& mesh) : index_(2 * static_cast<std::size_t>(mesh.num_nodes()), -1) {
    const auto clamped = dirichlet_nodes(mesh);
    for (int v = 0; v < mesh.num_nodes(); ++v) {
        if (clamped.contains(v)) continue;
        for (int c = 0; c < 2; ++c) {
            index_[2 * v + c] = static_cast<int>(free_.size());
            free_.emplace_back(v, c);
        }
    }
}

namespace {

std::array<Point, 3> vertices_of(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[t];
    return {mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]};
}

double checked_area(const std::array<Point, 3>& p) {
    const double area = 0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y));
    double h2 = 0.0;
    for (int e = 0; e < 3; ++e) {
        const double dx = p[(e + 1) % 3].x - p[e].x;
        const double dy = p[(e + 1) % 3].y - p[e].y;
        h2 = std::max(h2, dx * dx + dy * dy);
    }
    if (!(area > 1e-14 * h2)) throw InvalidArgument(fmt::format("degenerate triangle (area {})", area));
    return area;
}

std::array<int, 6> local_dofs(const Mesh& mesh, const DofMap& dofs, int t) {
    const auto& tri = mesh.triangles[t];
    std::array<int, 6> ids{};
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 2; ++c) ids[2 * a + c] = dofs.index(tri[a], c);
    return ids;
}

template <class ElementFn>
SparseMatrix assemble_symmetric(const Mesh& mesh, const DofMap& dofs, ElementFn&& element) {
    std::vector<Triplet> triplets;
    triplets.reserve(36 * static_cast<std::size_t>(mesh.num_triangles()));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Eigen::Matrix<double, 6, 6> Ke = element(vertices_of(mesh, t));
        const auto ids = local_dofs(mesh, dofs, t);
        for (int p = 0; p < 6; ++p) {
            if (ids[p] < 0) continue;
            for (int q = 0; q < 6; ++q)
                if (ids[q] >= 0) triplets.emplace_back(ids[p], ids[q], Ke(p, q));
        }
    }
    SparseMatrix A(dofs.size(), dofs.size());
    A.setFromTriplets(triplets.begin(), triplets.end());
    SparseMatrix At = A.transpose();
    SparseMatrix sym = 0.5 * (A + At);
    sym.makeCompressed();
    return sym;
}

}  // namespace

Eigen::Matrix<double, 6, 6> element_stiffness(const std::array<Point, 3>& p, const Material& material) {
    const double area = checked_area(p);
    // gradients of the barycentric coordinates
    Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
    for (int a = 0; a < 3; ++a) {
        const Point& q1 = p[(a + 1) % 3];
        const Point& q2 = p[(a + 2) % 3];
        const double dx = (q1.y - q2.y) / (2.0 * area);
        const double dy = (q2.x - q1.x) / (2.0 * area);
        B(0, 2 * a) = dx;
        B(1, 2 * a + 1) = dy;
        B(2, 2 * a) = dy;
        B(2, 2 * a + 1) = dx;
    }
    const double mu = material.mu();
    const double lam = material.lambda();
    Eigen::Matrix3d D;
    D << 2.0 * mu + lam, lam, 0.0, lam, 2.0 * mu + lam, 0.0, 0.0, 0.0, mu;
    return area * B.transpose() * D * B;
}

Eigen::Matrix<double, 6, 6> element_mass(const std::array<Point, 3>& p, const Material& material) {
    const double scale = material.rho * checked_area(p) / 12.0;
    Eigen::Matrix<double, 6, 6> Me = Eigen::Matrix<double, 6, 6>::Zero();
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 2; ++c) Me(2 * a + c, 2 * b + c) = scale * (a == b ? 2.0 : 1.0);
    return Me;
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const Material& material, const DofMap& dofs) {
    return assemble_symmetric(mesh, dofs, [&](const auto& v) { return element_stiffness(v, material); });
}

SparseMatrix assemble_mass(const Mesh& mesh, const Material& material, const DofMap& dofs) {
    return assemble_symmetric(mesh, dofs, [&](const auto& v) { return element_mass(v, material); });
}

Vector assemble_load(const Mesh& mesh, const LoadSpec& load, const DofMap& dofs) {
    Vector b = Vector::Zero(dofs.size());
    const auto add = [&](int node, const std::array<double, 2>& value, double weight) {
        for (int c = 0; c < 2; ++c) {
            const int id = dofs.index(node, c);
            if (id >= 0) b[id] += weight * value[c];
        }
    };

    if (load.body_force) {
        static constexpr double kBary[3][3] = {
            {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            const auto p = vertices_of(mesh, t);
            const double w = checked_area(p) / 3.0;
            for (const auto& l : kBary) {
                const Point x{l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x, l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y};
                const auto f = load.body_force(x);
                for (int a = 0; a < 3; ++a) add(mesh.triangles[t][a], f, w * l[a]);
            }
        }
    }

    if (load.traction) {
        static const double kOffset = 0.5 * std::sqrt(3.0 / 5.0);
        static const double kPoints[3] = {0.5 - kOffset, 0.5, 0.5 + kOffset};
        static constexpr double kWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
        for (const auto& edge : mesh.boundary_edges) {
            if (edge.tag != BoundaryTag::Neumann) continue;
            const Point& pa = mesh.nodes[edge.a];
            const Point& pb = mesh.nodes[edge.b];
            const double length = std::hypot(pb.x - pa.x, pb.y - pa.y);
            for (int q = 0; q < 3; ++q) {
                const double s = kPoints[q];
                const auto g = load.traction({(1.0 - s) * pa.x + s * pb.x, (1.0 - s) * pa.y + s * pb.y});
                add(edge.a, g, length * kWeights[q] * (1.0 - s));
                add(edge.b, g, length * kWeights[q] * s);
            }
        }
    }
    return b;
}

FullOrderSystem assemble_system(const Mesh& mesh, const Material& material, const LoadSpec& load) {
    material.validate();
    FullOrderSystem sys;
    sys.dof_map = DofMap(mesh);
    sys.material = material;
    sys.K = assemble_stiffness(mesh, material, sys.dof_map);
    sys.M = assemble_mass(mesh, material, sys.dof_map);
    sys.b = assemble_load(mesh, load, sys.dof_map);
    return sys;
}

Vector interpolate(const Mesh& mesh, const DofMap& dofs, const VectorField& field) {
    Vector values(dofs.size());
    for (int d = 0; d < dofs.size(); ++d) values[d] = field(mesh.nodes[dofs.node_of(d)])[dofs.component_of(d)];
    return values;
}

SparseMatrixC FullOrderSystem::response_matrix(double omega) const {
    const Complex ck(1.0, omega * material.alpha);
    const Complex cm(-omega * omega, omega * material.beta);
    SparseMatrixC A = K.cast<Complex>() * ck + M.cast<Complex>() * cm;
    A.makeCompressed();
    return A;
}

VectorC FullOrderSystem::apply_response(double omega, const VectorC& u) const {
    const Complex ck(1.0, omega * material.alpha);
    const Complex cm(-omega * omega, omega * material.beta);
    return ck * (K * u) + cm * (M * u);
}

double relative_residual(const FullOrderSystem& sys, double omega, const VectorC& u, const Vector& rhs) {
    const double scale = rhs.norm();
    const double res = (rhs.cast<Complex>() - sys.apply_response(omega, u)).norm();
    return scale > 0.0 ? res / scale : res;
}

VectorC solve_full_response(const FullOrderSystem& sys, double omega, const Vector& rhs) {
    if (!(omega >= 0.0)) throw InvalidArgument(fmt::format("frequency must be >= 0, got {}", omega));
    if (rhs.size() != sys.size()) throw InvalidArgument("load vector size does not match system");
    constexpr double kTol = 1e-10;

    if (omega == 0.0) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.K);
        if (ldlt.info() != Eigen::Success) throw InternalError("stiffness matrix factorization failed");
        Vector u = ldlt.solve(rhs);
        for (int it = 0; it < 3; ++it) {
            const Vector res = rhs - sys.K * u;
            if (res.norm() <= kTol * rhs.norm()) break;
            u += ldlt.solve(res);
        }
        return u.cast<Complex>();
    }

    const SparseMatrixC A = sys.response_matrix(omega);
    Eigen::SparseLU<SparseMatrixC> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw ResonanceError(fmt::format("frequency response matrix is singular at omega={}", omega), omega,
                             std::nan(""));
    const VectorC f = rhs.cast<Complex>();
    VectorC u = lu.solve(f);
    for (int it = 0; it < 3 && u.allFinite(); ++it) {
        const VectorC res = f - A * u;
        if (res.norm() <= kTol * f.norm()) break;
        u += lu.solve(res);
    }
    // |u| / |b| >= 1 / sigma_min(A); compare against the scale of the undamped terms
    const double scale = sys.K.norm() * std::abs(Complex(1.0, omega * sys.material.alpha)) +
                         sys.M.norm() * std::abs(Complex(-omega * omega, omega * sys.material.beta));
    const bool ill_conditioned = scale * u.norm() > 1e14 * f.norm();
    if (!u.allFinite() || ill_conditioned || relative_residual(sys, omega, u, rhs) > kTol)
        throw ResonanceError(fmt::format("frequency response solve failed at omega={} (near resonance)", omega),
                             omega, std::nan(""));
    return u;
}

double energy_norm(const SparseMatrix& K, const VectorC& v) {
    if (v.size() != K.rows()) throw InvalidArgument("energy_norm: dimension mismatch");
    const VectorC Kv = K * v;
    const double q = v.dot(Kv).real();  // dot() conjugates the first argument
    const double scale = v.norm() * Kv.norm();
    if (q < -1e-12 * scale) throw InternalError("energy form is negative: stiffness matrix not positive definite");
    return std::sqrt(std::max(q, 0.0));
}

double energy_norm(const SparseMatrix& K, const Vector& v) { return energy_norm(K, VectorC(v.cast<Complex>())); }

}  // namespace cms
