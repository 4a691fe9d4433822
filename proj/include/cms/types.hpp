#pragma once

#include <complex>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cms {

using Complex = std::complex<double>;

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseMatrixC = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<double>;

using Vector = Eigen::VectorXd;
using VectorC = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using MatrixC = Eigen::MatrixXcd;

}  // namespace cms
