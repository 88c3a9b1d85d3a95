#include "vbmi/kernels.hpp"

#include <omp.h>

#include <vector>

namespace vbmi::kernels {

namespace {

std::size_t chunk_count(Eigen::Index n) {
  return (static_cast<std::size_t>(n) + kChunkRows - 1) / kChunkRows;
}

inline Eigen::Index chunk_begin(std::size_t c) { return static_cast<Eigen::Index>(c * kChunkRows); }

inline Eigen::Index chunk_len(std::size_t c, Eigen::Index n) {
  const Eigen::Index b = chunk_begin(c);
  return std::min<Eigen::Index>(static_cast<Eigen::Index>(kChunkRows), n - b);
}

// Runs body(c) for every chunk, in parallel unless already inside a team.
template <class Body>
void for_chunks(std::size_t nchunks, Body&& body) {
  const bool par = nchunks > 1 && !omp_in_parallel();
#pragma omp parallel for schedule(static) if (par)
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) body(static_cast<std::size_t>(c));
}

}  // namespace

Eigen::MatrixXd gram(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const std::size_t nc = chunk_count(n);
  std::vector<Eigen::MatrixXd> part(nc);
  for_chunks(nc, [&](std::size_t c) {
    const auto blk = X.middleRows(chunk_begin(c), chunk_len(c, n));
    part[c] = Eigen::MatrixXd::Zero(p, p);
    part[c].selfadjointView<Eigen::Lower>().rankUpdate(blk.transpose());
  });
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (const auto& m : part) out += m;
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Eigen::VectorXd col_sumsq(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const std::size_t nc = chunk_count(n);
  std::vector<Eigen::VectorXd> part(nc);
  for_chunks(nc, [&](std::size_t c) {
    part[c] = X.middleRows(chunk_begin(c), chunk_len(c, n)).colwise().squaredNorm().transpose();
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.cols());
  for (const auto& v : part) out += v;
  return out;
}

Eigen::VectorXd crossprod(const Eigen::MatrixXd& X, const Eigen::VectorXd& r) {
  const Eigen::Index n = X.rows();
  const std::size_t nc = chunk_count(n);
  std::vector<Eigen::VectorXd> part(nc);
  for_chunks(nc, [&](std::size_t c) {
    const Eigen::Index b = chunk_begin(c), len = chunk_len(c, n);
    part[c] = X.middleRows(b, len).transpose() * r.segment(b, len);
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.cols());
  for (const auto& v : part) out += v;
  return out;
}

Eigen::VectorXd matvec(const Eigen::MatrixXd& X, const Eigen::VectorXd& b) {
  const Eigen::Index n = X.rows();
  Eigen::VectorXd out(n);
  for_chunks(chunk_count(n), [&](std::size_t c) {
    const Eigen::Index s = chunk_begin(c), len = chunk_len(c, n);
    out.segment(s, len).noalias() = X.middleRows(s, len) * b;
  });
  return out;
}

double sum(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  const std::size_t nc = chunk_count(n);
  std::vector<double> part(nc, 0.0);
  for_chunks(nc, [&](std::size_t c) { part[c] = v.segment(chunk_begin(c), chunk_len(c, n)).sum(); });
  double out = 0.0;
  for (double x : part) out += x;
  return out;
}

namespace serial {

Eigen::MatrixXd gram(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index k = 0; k <= j; ++k) out(j, k) += X(r, j) * X(r, k);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < j; ++k) out(k, j) = out(j, k);
  return out;
}

Eigen::VectorXd col_sumsq(const Eigen::MatrixXd& X) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    for (Eigen::Index j = 0; j < X.cols(); ++j) out(j) += X(r, j) * X(r, j);
  return out;
}

Eigen::VectorXd crossprod(const Eigen::MatrixXd& X, const Eigen::VectorXd& r) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) out(j) += X(i, j) * r(i);
  return out;
}

Eigen::VectorXd matvec(const Eigen::MatrixXd& X, const Eigen::VectorXd& b) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) out(i) += X(i, j) * b(j);
  return out;
}

double sum(const Eigen::VectorXd& v) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += v(i);
  return out;
}

}  // namespace serial

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace vbmi::kernels
