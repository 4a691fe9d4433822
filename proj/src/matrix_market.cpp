#include "cms/matrix_market.hpp"

#include <cstdio>
#include <memory>

#include <fmt/format.h>

#include "cms/errors.hpp"

namespace cms {

namespace {

using File = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

File open_for_write(const std::string& path) {
    File f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f) throw Error(fmt::format("cannot write {}", path));
    return f;
}

}  // namespace

void write_matrix_market(const std::string& path, const SparseMatrix& A, bool symmetric) {
    if (symmetric && (A.rows() != A.cols() || SparseMatrix(A - SparseMatrix(A.transpose())).norm() != 0.0))
        throw InvalidArgument("symmetric Matrix Market export of a nonsymmetric matrix");
    long nnz = 0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            if (!symmetric || it.row() >= it.col()) ++nnz;
    auto f = open_for_write(path);
    fmt::print(f.get(), "%%MatrixMarket matrix coordinate real {}\n", symmetric ? "symmetric" : "general");
    fmt::print(f.get(), "{} {} {}\n", A.rows(), A.cols(), nnz);
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            if (!symmetric || it.row() >= it.col())
                fmt::print(f.get(), "{} {} {:.17g}\n", it.row() + 1, it.col() + 1, it.value());
}

void write_matrix_market(const std::string& path, const Matrix& A) {
    auto f = open_for_write(path);
    fmt::print(f.get(), "%%MatrixMarket matrix array real general\n{} {}\n", A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j)
        for (Eigen::Index i = 0; i < A.rows(); ++i) fmt::print(f.get(), "{:.17g}\n", A(i, j));
}

void write_matrix_market(const std::string& path, const Vector& v) { write_matrix_market(path, Matrix(v)); }

}  // namespace cms
