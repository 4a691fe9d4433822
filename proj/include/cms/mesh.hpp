#pragma once

#include <array>
#include <functional>
#include <set>
#include <vector>

namespace cms {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

enum class BoundaryTag { Dirichlet, Neumann };

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    BoundaryTag tag = BoundaryTag::Neumann;
};

/// Triangular mesh of a planar domain split into labelled subdomains.
///
/// Triangles are counter-clockwise. Subdomain labels run 1..n_subdomains and
/// every label is used. The boundary edge list covers the topological boundary
/// exactly once.
struct Mesh {
    std::vector<Point> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> subdomain_of_triangle;
    std::vector<BoundaryEdge> boundary_edges;
    int n_subdomains = 0;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }

    double signed_area(int t) const;

    /// Throws InvalidArgument if any of the Mesh invariants is violated.
    void validate() const;
};

/// Decides whether a boundary edge with the given midpoint is clamped.
using DirichletRule = std::function<bool(const Point& midpoint)>;

/// Clamped at x = 0, free elsewhere.
DirichletRule clamp_left();
/// Clamped at x = 0 and x = width.
DirichletRule clamp_left_right(double width);

struct SubdomainGrid {
    int gx = 1;
    int gy = 1;
};

/// Structured mesh of [0, width] x [0, height] with nx x ny cells, each split
/// into two triangles along the (i, j) -> (i+1, j+1) diagonal. Subdomain of a
/// cell is its block in a gx x gy grid, numbered row by row from the origin.
Mesh build_rect_mesh(double width, double height, int nx, int ny, SubdomainGrid grid,
                     const DirichletRule& dirichlet = clamp_left());

/// Nodes touched by triangles of at least two distinct subdomains.
std::set<int> interface_nodes(const Mesh& mesh);

/// Nodes on edges tagged Dirichlet.
std::set<int> dirichlet_nodes(const Mesh& mesh);

}  // namespace cms
