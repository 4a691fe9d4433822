#pragma once

#include <iosfwd>
#include <string>

#include "cms/mesh.hpp"

namespace cms {

// Plain-text mesh format:
//
//   <N> nodes <T> triangles <S> subdomains
//   x y                      (N lines)
//   i j k subdomain          (T lines, zero-based node ids)
//   i j dirichlet|neumann    (one line per boundary edge, until end of file)
//
// Coordinates are written with 17 significant digits so a round trip is exact.

void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh(const std::string& path, const Mesh& mesh);

/// Parses and validates a mesh. Throws InvalidArgument on malformed input.
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::string& path);

}  // namespace cms
