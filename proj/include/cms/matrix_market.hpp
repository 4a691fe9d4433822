#pragma once

#include <string>

#include "cms/types.hpp"

namespace cms {

/// Coordinate format. With `symmetric`, only the lower triangle is written and
/// the header says so; the matrix must then be symmetric.
void write_matrix_market(const std::string& path, const SparseMatrix& A, bool symmetric);

/// Dense array format, column-major.
void write_matrix_market(const std::string& path, const Matrix& A);
void write_matrix_market(const std::string& path, const Vector& v);

}  // namespace cms
