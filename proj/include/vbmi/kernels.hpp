#pragma once

#include <Eigen/Dense>
#include <cstddef>

// Row-chunked linear-algebra kernels. Chunk boundaries are fixed by the row
// count, never by the thread count, and partial results are combined in
// chunk order, so every result is bit-identical at any OpenMP thread count.
namespace vbmi::kernels {

inline constexpr std::size_t kChunkRows = 256;

Eigen::MatrixXd gram(const Eigen::MatrixXd& X);                                 // X^T X
Eigen::VectorXd col_sumsq(const Eigen::MatrixXd& X);                            // diag(X^T X)
Eigen::VectorXd crossprod(const Eigen::MatrixXd& X, const Eigen::VectorXd& r);  // X^T r
Eigen::VectorXd matvec(const Eigen::MatrixXd& X, const Eigen::VectorXd& b);     // X b
double sum(const Eigen::VectorXd& v);

// Plain loop versions kept as the reference for tests and benchmarks.
namespace serial {
Eigen::MatrixXd gram(const Eigen::MatrixXd& X);
Eigen::VectorXd col_sumsq(const Eigen::MatrixXd& X);
Eigen::VectorXd crossprod(const Eigen::MatrixXd& X, const Eigen::VectorXd& r);
Eigen::VectorXd matvec(const Eigen::MatrixXd& X, const Eigen::VectorXd& b);
double sum(const Eigen::VectorXd& v);
}  // namespace serial

int max_threads();
void set_threads(int n);

}  // namespace vbmi::kernels
