#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cms/decomposition.hpp"
#include "cms/fem.hpp"
#include "cms/mesh.hpp"

namespace cms {

/// FNV-1a hash of everything the modal basis depends on.
std::uint64_t basis_cache_key(const Mesh& mesh, const Material& material, const DofPartition& partition,
                              const std::vector<int>& counts, const ModalBasisOptions& options);

std::string basis_cache_path(const std::string& dir, std::uint64_t key);

/// Binary little-endian dump of the eigenpairs of every subspace.
void save_basis(const std::string& path, std::uint64_t key, const ModalBasis& basis);

/// Returns nullopt if the file is missing, has another key or is malformed.
std::optional<ModalBasis> load_basis(const std::string& path, std::uint64_t key, const DofPartition& partition,
                                     const ExtensionOperator& extension, const SparseMatrix& K, const SparseMatrix& M);

}  // namespace cms
