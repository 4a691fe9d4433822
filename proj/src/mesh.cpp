#include "cms/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include <fmt/format.h>

#include "cms/errors.hpp"

namespace cms {

namespace {

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

double Mesh::signed_area(int t) const {
    const auto& tri = triangles[t];
    const Point& p0 = nodes[tri[0]];
    const Point& p1 = nodes[tri[1]];
    const Point& p2 = nodes[tri[2]];
    return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

void Mesh::validate() const {
    if (n_subdomains < 1) throw InvalidArgument("mesh has no subdomains");
    if (subdomain_of_triangle.size() != triangles.size())
        throw InvalidArgument("subdomain label count does not match triangle count");

    std::vector<int> used(n_subdomains + 1, 0);
    std::map<std::pair<int, int>, int> edge_count;
    for (int t = 0; t < num_triangles(); ++t) {
        const auto& tri = triangles[t];
        for (int v : tri)
            if (v < 0 || v >= num_nodes())
                throw InvalidArgument(fmt::format("triangle {} references node {}", t, v));
        if (!(signed_area(t) > 0.0))
            throw InvalidArgument(fmt::format("triangle {} has non-positive area", t));
        const int label = subdomain_of_triangle[t];
        if (label < 1 || label > n_subdomains)
            throw InvalidArgument(fmt::format("triangle {} has subdomain label {}", t, label));
        used[label] = 1;
        for (int e = 0; e < 3; ++e) ++edge_count[edge_key(tri[e], tri[(e + 1) % 3])];
    }
    for (int s = 1; s <= n_subdomains; ++s)
        if (!used[s]) throw InvalidArgument(fmt::format("subdomain {} is empty", s));

    std::map<std::pair<int, int>, int> tagged;
    for (const auto& edge : boundary_edges) ++tagged[edge_key(edge.a, edge.b)];
    for (const auto& [key, count] : edge_count) {
        if (count > 2) throw InvalidArgument("non-conforming triangulation: edge shared by > 2 triangles");
        const auto it = tagged.find(key);
        const int tags = it == tagged.end() ? 0 : it->second;
        if (count == 1 && tags != 1)
            throw InvalidArgument(fmt::format("boundary edge ({}, {}) carries {} tags", key.first,
                                              key.second, tags));
        if (count == 2 && tags != 0)
            throw InvalidArgument(fmt::format("interior edge ({}, {}) is tagged", key.first, key.second));
    }
    for (const auto& [key, count] : tagged)
        if (!edge_count.contains(key))
            throw InvalidArgument(fmt::format("tagged edge ({}, {}) is not a mesh edge", key.first,
                                              key.second));
}

DirichletRule clamp_left() {
    return [](const Point& mid) { return mid.x < 1e-12; };
}

DirichletRule clamp_left_right(double width) {
    return [width](const Point& mid) { return mid.x < 1e-12 || mid.x > width - 1e-12 * std::max(1.0, width); };
}

Mesh build_rect_mesh(double width, double height, int nx, int ny, SubdomainGrid grid,
                     const DirichletRule& dirichlet) {
    if (!(width > 0.0) || !(height > 0.0))
        throw InvalidArgument(fmt::format("rectangle dimensions must be positive, got {} x {}", width, height));
    if (nx < 1 || ny < 1) throw InvalidArgument(fmt::format("cell counts must be >= 1, got {} x {}", nx, ny));
    if (grid.gx < 1 || grid.gy < 1)
        throw InvalidArgument(fmt::format("subdomain grid must be >= 1, got {} x {}", grid.gx, grid.gy));
    if (nx % grid.gx != 0 || ny % grid.gy != 0)
        throw InvalidArgument(fmt::format(
            "subdomain grid {}x{} does not divide the {}x{} cell grid", grid.gx, grid.gy, nx, ny));

    Mesh mesh;
    mesh.n_subdomains = grid.gx * grid.gy;
    mesh.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.nodes.push_back({width * i / nx, height * j / ny});

    const auto node = [nx](int i, int j) { return j * (nx + 1) + i; };
    const int bx = nx / grid.gx;
    const int by = ny / grid.gy;
    mesh.triangles.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int label = 1 + i / bx + grid.gx * (j / by);
            mesh.triangles.push_back({node(i, j), node(i + 1, j), node(i + 1, j + 1)});
            mesh.triangles.push_back({node(i, j), node(i + 1, j + 1), node(i, j + 1)});
            mesh.subdomain_of_triangle.push_back(label);
            mesh.subdomain_of_triangle.push_back(label);
        }
    }

    const auto add_edge = [&](int a, int b) {
        const Point& pa = mesh.nodes[a];
        const Point& pb = mesh.nodes[b];
        const Point mid{0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)};
        mesh.boundary_edges.push_back({a, b, dirichlet(mid) ? BoundaryTag::Dirichlet : BoundaryTag::Neumann});
    };
    // counter-clockwise walk: bottom, right, top, left
    for (int i = 0; i < nx; ++i) add_edge(node(i, 0), node(i + 1, 0));
    for (int j = 0; j < ny; ++j) add_edge(node(nx, j), node(nx, j + 1));
    for (int i = nx; i > 0; --i) add_edge(node(i, ny), node(i - 1, ny));
    for (int j = ny; j > 0; --j) add_edge(node(0, j), node(0, j - 1));
    return mesh;
}

std::set<int> interface_nodes(const Mesh& mesh) {
    std::vector<int> first_label(mesh.num_nodes(), 0);
    std::set<int> result;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const int label = mesh.subdomain_of_triangle[t];
        for (int v : mesh.triangles[t]) {
            if (first_label[v] == 0)
                first_label[v] = label;
            else if (first_label[v] != label)
                result.insert(v);
        }
    }
    return result;
}

std::set<int> dirichlet_nodes(const Mesh& mesh) {
    std::set<int> result;
    for (const auto& edge : mesh.boundary_edges) {
        if (edge.tag == BoundaryTag::Dirichlet) {
            result.insert(edge.a);
            result.insert(edge.b);
        }
    }
    return result;
}

}  // namespace cms
