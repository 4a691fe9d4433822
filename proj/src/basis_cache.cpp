#include "cms/basis_cache.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cms/errors.hpp"

namespace cms {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'S', 'B', 'A', 'S', '1', '\n'};

class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 1099511628211ULL;
        }
    }
    template <class T>
    void value(const T& v) {
        bytes(&v, sizeof(T));
    }
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = 14695981039346656037ULL;
};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::istream& in, T& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

std::uint64_t basis_cache_key(const Mesh& mesh, const Material& material, const DofPartition& partition,
                              const std::vector<int>& counts, const ModalBasisOptions& options) {
    Fnv1a h;
    for (const auto& p : mesh.nodes) {
        h.value(p.x);
        h.value(p.y);
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int v : mesh.triangles[t]) h.value(v);
        h.value(mesh.subdomain_of_triangle[t]);
    }
    for (const auto& e : mesh.boundary_edges) {
        h.value(e.a);
        h.value(e.b);
        h.value(static_cast<int>(e.tag));
    }
    h.value(material.E);
    h.value(material.nu);
    h.value(material.rho);
    for (int s = 0; s < partition.num_subspaces(); ++s) {
        const auto& d = partition.dofs(s);
        h.value(static_cast<std::uint64_t>(d.size()));
        h.bytes(d.data(), d.size() * sizeof(int));
    }
    for (int c : counts) h.value(c);
    h.value(options.eigen.dense_threshold);
    h.value(options.eigen.tolerance);
    h.value(options.eigen.seed);
    return h.digest();
}

std::string basis_cache_path(const std::string& dir, std::uint64_t key) {
    return (std::filesystem::path(dir) / fmt::format("basis-{:016x}.bin", key)).string();
}

void save_basis(const std::string& path, std::uint64_t key, const ModalBasis& basis) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write basis cache {}", path));
    out.write(kMagic, sizeof(kMagic));
    put(out, key);
    put(out, static_cast<std::int32_t>(basis.num_subspaces()));
    for (int s = 0; s < basis.num_subspaces(); ++s) {
        const auto& sub = basis.subspace(s);
        put(out, static_cast<std::int32_t>(sub.local.rows()));
        put(out, static_cast<std::int32_t>(sub.count()));
        out.write(reinterpret_cast<const char*>(sub.eigenvalues.data()),
                  static_cast<std::streamsize>(sub.count() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(sub.local.data()),
                  static_cast<std::streamsize>(sub.local.size() * sizeof(double)));
    }
    if (!out) throw Error(fmt::format("error writing basis cache {}", path));
}

std::optional<ModalBasis> load_basis(const std::string& path, std::uint64_t key, const DofPartition& partition,
                                     const ExtensionOperator& extension, const SparseMatrix& K, const SparseMatrix& M) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof(kMagic)];
    std::uint64_t stored = 0;
    std::int32_t ns = 0;
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || !get(in, stored) ||
        stored != key || !get(in, ns) || ns != partition.num_subspaces()) {
        spdlog::warn("ignoring basis cache {}: header mismatch", path);
        return std::nullopt;
    }
    std::vector<SubspaceModes> subspaces(ns);
    for (int s = 0; s < ns; ++s) {
        std::int32_t rows = 0, k = 0;
        auto& sub = subspaces[s];
        sub.dofs = partition.dofs(s);
        sub.dimension = static_cast<int>(sub.dofs.size());
        if (!get(in, rows) || !get(in, k) || rows != sub.dimension || k < 0 || k > sub.dimension) {
            spdlog::warn("ignoring basis cache {}: subspace {} does not match", path, s);
            return std::nullopt;
        }
        sub.eigenvalues.resize(k);
        sub.local.resize(rows, k);
        in.read(reinterpret_cast<char*>(sub.eigenvalues.data()), static_cast<std::streamsize>(k * sizeof(double)));
        in.read(reinterpret_cast<char*>(sub.local.data()),
                static_cast<std::streamsize>(sub.local.size() * sizeof(double)));
        if (!in) {
            spdlog::warn("ignoring basis cache {}: truncated", path);
            return std::nullopt;
        }
        if (s == 0) sub.lifted = extension.matrix() * sub.local;
    }
    return ModalBasis(extension.full_size(), std::move(subspaces), K, M);
}

}  // namespace cms
