#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "cms/errors.hpp"
#include "cms/fem.hpp"
#include "cms/problem.hpp"
#include "support.hpp"

using namespace cms;

namespace {

Mesh no_dirichlet_mesh(int nx, int ny, double w = 1.0, double h = 1.0) {
    return build_rect_mesh(w, h, nx, ny, {1, 1}, [](const Point&) { return false; });
}

// Stiffness of a P1 triangle from strains evaluated at the edge midpoints.
Eigen::Matrix<double, 6, 6> quadrature_stiffness(const std::array<Point, 3>& p, double mu, double lambda) {
    const double area2 = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    auto grad = [&](int a, double, double) {
        const Point& q = p[(a + 1) % 3];
        const Point& r = p[(a + 2) % 3];
        return std::array<double, 2>{(q.y - r.y) / area2, (r.x - q.x) / area2};
    };
    const Point mids[3] = {{(p[0].x + p[1].x) / 2, (p[0].y + p[1].y) / 2},
                           {(p[1].x + p[2].x) / 2, (p[1].y + p[2].y) / 2},
                           {(p[2].x + p[0].x) / 2, (p[2].y + p[0].y) / 2}};
    Eigen::Matrix<double, 6, 6> K = Eigen::Matrix<double, 6, 6>::Zero();
    for (const auto& x : mids) {
        double eps[6][2][2];
        for (int i = 0; i < 6; ++i) {
            const auto g = grad(i / 2, x.x, x.y);
            double du[2][2] = {{0, 0}, {0, 0}};
            du[i % 2][0] = g[0];
            du[i % 2][1] = g[1];
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) eps[i][r][c] = 0.5 * (du[r][c] + du[c][r]);
        }
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                double contraction = 0;
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c) contraction += eps[i][r][c] * eps[j][r][c];
                const double div_i = eps[i][0][0] + eps[i][1][1];
                const double div_j = eps[j][0][0] + eps[j][1][1];
                K(i, j) += (area2 / 2) / 3 * (2 * mu * contraction + lambda * div_i * div_j);
            }
    }
    return K;
}

}  // namespace

TEST(Material, DerivedConstants) {
    Material m;
    EXPECT_DOUBLE_EQ(m.mu(), 1.0 / 2.58);
    EXPECT_DOUBLE_EQ(m.lambda(), 0.29 / (1.29 * 0.42));
    EXPECT_DOUBLE_EQ(m.modal_damping(2.0), 0.025 * 2 + 0.025);
    Material bad = m;
    bad.nu = 0.5;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = m;
    bad.E = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = m;
    bad.alpha = -1;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(DofMap, SkipsClampedNodes) {
    const Mesh m = build_rect_mesh(1, 1, 3, 2, {1, 1});
    const DofMap d(m);
    EXPECT_EQ(d.size(), 2 * (12 - 3));
    for (int node : dirichlet_nodes(m)) {
        EXPECT_EQ(d.index(node, 0), -1);
        EXPECT_EQ(d.index(node, 1), -1);
    }
    for (int k = 0; k < d.size(); ++k) EXPECT_EQ(d.index(d.node_of(k), d.component_of(k)), k);
}

TEST(Stiffness, RigidTranslationsAreFree) {
    Mesh m;
    m.nodes = {{0, 0}, {1, 0}, {0, 1}};
    m.triangles = {{0, 1, 2}};
    m.subdomain_of_triangle = {1};
    m.n_subdomains = 1;
    m.boundary_edges = {{0, 1, BoundaryTag::Neumann}, {1, 2, BoundaryTag::Neumann}, {2, 0, BoundaryTag::Neumann}};
    Material mat;
    mat.E = 2.0 * (1.0 + 0.0);  // mu = 1
    mat.nu = 0.0;               // lambda = 0
    const DofMap d(m);
    const Matrix K = assemble_stiffness(m, mat, d);
    Vector tx(6), ty(6);
    tx << 1, 0, 1, 0, 1, 0;
    ty << 0, 1, 0, 1, 0, 1;
    EXPECT_LT((K * tx).norm(), 1e-14);
    EXPECT_LT((K * ty).norm(), 1e-14);
    Vector rot(6);
    rot << 0, 0, 0, 1, -1, 0;  // infinitesimal rotation (-y, x)
    EXPECT_LT((K * rot).norm(), 1e-14);
}

TEST(Stiffness, ElementMatchesQuadratureOracle) {
    Material mat;
    const std::array<Point, 3> unit{{{0, 0}, {1, 0}, {0, 1}}};
    const auto K = element_stiffness(unit, mat);
    const auto oracle = quadrature_stiffness(unit, mat.mu(), mat.lambda());
    EXPECT_LT((K - oracle).cwiseAbs().maxCoeff(), 1e-14);

    const std::array<Point, 3> skew{{{0.1, 0.2}, {0.9, 0.35}, {0.3, 0.8}}};
    EXPECT_LT((element_stiffness(skew, mat) - quadrature_stiffness(skew, mat.mu(), mat.lambda())).cwiseAbs().maxCoeff(),
              1e-13);
}

TEST(Stiffness, DegenerateTriangleRejected) {
    const std::array<Point, 3> flat{{{0, 0}, {1, 0}, {2, 1e-16}}};
    EXPECT_THROW(element_stiffness(flat, Material{}), InvalidArgument);
}

TEST(Stiffness, ClampedIsPositiveDefinite) {
    const Mesh m = build_rect_mesh(1, 1, 6, 6, {1, 1});
    const DofMap d(m);
    const Matrix K = assemble_stiffness(m, Material{}, d);
    EXPECT_EQ((K - K.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Mass, ElementFormula) {
    Material mat;
    const std::array<Point, 3> p{{{0.1, 0.2}, {0.9, 0.35}, {0.3, 0.8}}};
    const double area = 0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y));
    const auto Me = element_mass(p, mat);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            // integral of phi_a phi_b over a triangle is area (1 + delta_ab) / 12
            const double expected = (i % 2 == j % 2) ? area * (i / 2 == j / 2 ? 2.0 : 1.0) / 12.0 : 0.0;
            EXPECT_NEAR(Me(i, j), expected, 1e-15);
        }
}

TEST(Mass, ConstantFunctionIdentity) {
    Material mat;
    mat.rho = 2.5;
    const Mesh m = no_dirichlet_mesh(5, 7, 2.0, 0.5);
    const DofMap d(m);
    const SparseMatrix M = assemble_mass(m, mat, d);
    Vector ones_x = Vector::Zero(d.size());
    for (int k = 0; k < d.size(); ++k)
        if (d.component_of(k) == 0) ones_x[k] = 1.0;
    EXPECT_NEAR(ones_x.dot(M * ones_x), 2.5 * 1.0, 1e-12);
    const Eigen::LLT<Matrix> llt{Matrix(M)};
    EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Assembly, ScalingIsExact) {
    const Mesh m = build_rect_mesh(1, 1, 4, 4, {1, 1});
    const DofMap d(m);
    Material a, b;
    b.E = 3.0;
    b.rho = 7.0;
    const SparseMatrix Ka = assemble_stiffness(m, a, d), Kb = assemble_stiffness(m, b, d);
    const SparseMatrix Ma = assemble_mass(m, a, d), Mb = assemble_mass(m, b, d);
    EXPECT_LT((Matrix(Kb) - 3.0 * Matrix(Ka)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((Matrix(Mb) - 7.0 * Matrix(Ma)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Load, BodyForcePartitionOfUnity) {
    const Mesh m = no_dirichlet_mesh(6, 4);
    const DofMap d(m);
    LoadSpec load;
    load.body_force = [](const Point&) { return std::array<double, 2>{1.0, 0.0}; };
    const Vector b = assemble_load(m, load, d);
    double sx = 0, sy = 0;
    for (int k = 0; k < d.size(); ++k) (d.component_of(k) == 0 ? sx : sy) += b[k];
    EXPECT_NEAR(sx, 1.0, 1e-12);
    EXPECT_NEAR(sy, 0.0, 1e-15);
}

TEST(Load, ZeroLoad) {
    const Mesh m = build_rect_mesh(1, 1, 3, 3, {1, 1});
    const DofMap d(m);
    EXPECT_EQ(assemble_load(m, LoadSpec{}, d).norm(), 0.0);
    LoadSpec zero;
    zero.traction = [](const Point&) { return std::array<double, 2>{0.0, 0.0}; };
    EXPECT_EQ(assemble_load(m, zero, d).norm(), 0.0);
}

TEST(Load, GaussianTractionMatchesDenseQuadrature) {
    // 7200 elements, the size of the reference computations
    const Mesh m = build_rect_mesh(1, 1, 60, 60, {1, 1});
    const DofMap d(m);
    const GaussianField g{{0.7, 1.0}, {0.0, -1.0}, 1.0, 100.0};
    const Vector b = assemble_load(m, make_load(g, std::nullopt), d);

    // composite Simpson with 50 panels per edge
    Vector oracle = Vector::Zero(d.size());
    constexpr int panels = 50;
    for (const auto& e : m.boundary_edges) {
        if (e.tag != BoundaryTag::Neumann) continue;
        const Point a = m.nodes[e.a], c = m.nodes[e.b];
        const double len = std::hypot(c.x - a.x, c.y - a.y);
        for (int k = 0; k <= 2 * panels; ++k) {
            const double s = static_cast<double>(k) / (2 * panels);
            const double w = (k == 0 || k == 2 * panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            const double weight = w * len / (6 * panels);
            const auto val = g({a.x + s * (c.x - a.x), a.y + s * (c.y - a.y)});
            for (int comp = 0; comp < 2; ++comp) {
                if (d.index(e.a, comp) >= 0) oracle[d.index(e.a, comp)] += weight * val[comp] * (1 - s);
                if (d.index(e.b, comp) >= 0) oracle[d.index(e.b, comp)] += weight * val[comp] * s;
            }
        }
    }
    EXPECT_GT(b.norm(), 1e-3);
    EXPECT_LT((b - oracle).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FullSolve, StaticLimitIsReal) {
    const Problem& p = test::small_problem();
    const VectorC u = solve_full_response(p.system, 0.0);
    EXPECT_EQ(u.imag().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LT((p.system.K * u.real() - p.system.b).norm(), 1e-10 * p.system.b.norm());
}

TEST(FullSolve, ResidualContract) {
    const Problem& p = test::small_problem();
    for (double w : {0.5, 1.0, std::sqrt(1.5), 3.0}) {
        const VectorC u = solve_full_response(p.system, w);
        EXPECT_LE(relative_residual(p.system, w, u, p.system.b), 1e-10) << w;
    }
}

TEST(FullSolve, ScalarSystem) {
    FullOrderSystem sys;
    std::vector<Triplet> k{{0, 0, 2.0}}, mm{{0, 0, 1.0}};
    sys.K.resize(1, 1);
    sys.K.setFromTriplets(k.begin(), k.end());
    sys.M.resize(1, 1);
    sys.M.setFromTriplets(mm.begin(), mm.end());
    sys.b = Vector::Ones(1);
    sys.material.alpha = sys.material.beta = 0.025;
    const double w = 1.0;
    const Complex expected = 1.0 / Complex(2.0 - w * w, w * (0.025 * 2.0 + 0.025 * 1.0));
    const VectorC u = solve_full_response(sys, w);
    EXPECT_LT(std::abs(u[0] - expected), 1e-15);
}

TEST(FullSolve, UndampedResonanceReported) {
    FullOrderSystem sys;
    std::vector<Triplet> k{{0, 0, 2.0}}, mm{{0, 0, 1.0}};
    sys.K.resize(1, 1);
    sys.K.setFromTriplets(k.begin(), k.end());
    sys.M.resize(1, 1);
    sys.M.setFromTriplets(mm.begin(), mm.end());
    sys.b = Vector::Ones(1);
    sys.material.alpha = sys.material.beta = 0.0;
    EXPECT_THROW(solve_full_response(sys, std::sqrt(2.0)), ResonanceError);
    EXPECT_THROW(solve_full_response(sys, -1.0), InvalidArgument);
}

TEST(EnergyNorm, Basics) {
    const Problem& p = test::small_problem();
    const int n = p.system.size();
    EXPECT_EQ(energy_norm(p.system.K, VectorC(VectorC::Zero(n))), 0.0);

    std::mt19937_64 rng(11);
    const Matrix Kd(p.system.K);
    for (int t = 0; t < 5; ++t) {
        const VectorC v = test::random_complex(rng, n);
        EXPECT_NEAR(energy_norm(p.system.K, v), test::dense_energy(Kd, v), 1e-12 * test::dense_energy(Kd, v));
    }

    // an M-normalized eigenvector of one interior block has energy sqrt(lambda)
    const auto& sub = p.basis->subspace(1);
    const Matrix Z = p.basis->lift(1, 0, 1);
    EXPECT_NEAR(energy_norm(p.system.K, Vector(Z.col(0))), std::sqrt(sub.eigenvalues[0]), 1e-10);
}

TEST(EnergyNorm, IndefiniteFormSignalsInternalError) {
    SparseMatrix K(2, 2);
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, -1.0}};
    K.setFromTriplets(t.begin(), t.end());
    Vector v(2);
    v << 0.0, 1.0;
    EXPECT_THROW(energy_norm(K, v), InternalError);
}
