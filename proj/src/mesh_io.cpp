#include "cms/mesh_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cms/errors.hpp"

namespace cms {

void write_mesh(std::ostream& out, const Mesh& mesh) {
    fmt::print(out, "{} nodes {} triangles {} subdomains\n", mesh.num_nodes(), mesh.num_triangles(),
               mesh.n_subdomains);
    for (const auto& p : mesh.nodes) fmt::print(out, "{:.17g} {:.17g}\n", p.x, p.y);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        fmt::print(out, "{} {} {} {}\n", tri[0], tri[1], tri[2], mesh.subdomain_of_triangle[t]);
    }
    for (const auto& e : mesh.boundary_edges)
        fmt::print(out, "{} {} {}\n", e.a, e.b, e.tag == BoundaryTag::Dirichlet ? "dirichlet" : "neumann");
}

void write_mesh(const std::string& path, const Mesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot open '{}' for writing", path));
    write_mesh(out, mesh);
}

Mesh read_mesh(std::istream& in) {
    std::string line;
    int line_no = 0;
    const auto next_line = [&]() -> std::istringstream {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
        }
        throw InvalidArgument(fmt::format("mesh file: unexpected end of file after line {}", line_no));
    };
    const auto fail = [&](const char* what) {
        return InvalidArgument(fmt::format("mesh file line {}: {}", line_no, what));
    };

    Mesh mesh;
    int n_nodes = 0;
    int n_tris = 0;
    {
        auto header = next_line();
        std::string w1, w2, w3;
        if (!(header >> n_nodes >> w1 >> n_tris >> w2 >> mesh.n_subdomains >> w3) || w1 != "nodes" ||
            w2 != "triangles" || w3 != "subdomains" || n_nodes < 0 || n_tris < 0)
            throw fail("expected '<N> nodes <T> triangles <S> subdomains'");
    }
    mesh.nodes.resize(n_nodes);
    for (auto& p : mesh.nodes) {
        auto ls = next_line();
        if (!(ls >> p.x >> p.y)) throw fail("expected 'x y'");
    }
    mesh.triangles.resize(n_tris);
    mesh.subdomain_of_triangle.resize(n_tris);
    for (int t = 0; t < n_tris; ++t) {
        auto ls = next_line();
        auto& tri = mesh.triangles[t];
        if (!(ls >> tri[0] >> tri[1] >> tri[2] >> mesh.subdomain_of_triangle[t]))
            throw fail("expected 'i j k subdomain'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        BoundaryEdge e;
        std::string tag;
        if (!(ls >> e.a >> e.b >> tag)) throw fail("expected 'i j tag'");
        if (tag == "dirichlet")
            e.tag = BoundaryTag::Dirichlet;
        else if (tag == "neumann")
            e.tag = BoundaryTag::Neumann;
        else
            throw fail("boundary tag must be 'dirichlet' or 'neumann'");
        if (e.a < 0 || e.a >= n_nodes || e.b < 0 || e.b >= n_nodes) throw fail("edge node out of range");
        mesh.boundary_edges.push_back(e);
    }
    mesh.validate();
    return mesh;
}

Mesh read_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open '{}'", path));
    return read_mesh(in);
}

}  // namespace cms
