// Serial reference kernels against the chunked OpenMP versions.
#include <benchmark/benchmark.h>

#include "vbmi/kernels.hpp"
#include "vbmi/rng.hpp"
#include "vbmi/simstudy.hpp"
#include "vbmi/vb.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index p) {
  vbmi::RngStream rng(7, 0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = rng.normal();
  return X;
}

void BM_gram_serial(benchmark::State& st) {
  const auto X = random_matrix(st.range(0), 64);
  for (auto _ : st) benchmark::DoNotOptimize(vbmi::kernels::serial::gram(X));
}

void BM_gram_parallel(benchmark::State& st) {
  const auto X = random_matrix(st.range(0), 64);
  for (auto _ : st) benchmark::DoNotOptimize(vbmi::kernels::gram(X));
}

void BM_crossprod_serial(benchmark::State& st) {
  const auto X = random_matrix(st.range(0), 64);
  const Eigen::VectorXd r = X.col(0);
  for (auto _ : st) benchmark::DoNotOptimize(vbmi::kernels::serial::crossprod(X, r));
}

void BM_crossprod_parallel(benchmark::State& st) {
  const auto X = random_matrix(st.range(0), 64);
  const Eigen::VectorXd r = X.col(0);
  for (auto _ : st) benchmark::DoNotOptimize(vbmi::kernels::crossprod(X, r));
}

void BM_matvec_serial(benchmark::State& st) {
  const auto X = random_matrix(st.range(0), 64);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(64);
  for (auto _ : st) benchmark::DoNotOptimize(vbmi::kernels::serial::matvec(X, b));
}

void BM_matvec_parallel(benchmark::State& st) {
  const auto X = random_matrix(st.range(0), 64);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(64);
  for (auto _ : st) benchmark::DoNotOptimize(vbmi::kernels::matvec(X, b));
}

// One full variational fit at desk-simulation size.
void BM_fit_desk(benchmark::State& st) {
  vbmi::SimConfig cfg;
  vbmi::RngStream rng(3, 1);
  const auto data = vbmi::gen_continuous(cfg, rng);
  vbmi::Design d;
  d.X = data.X;
  d.Z = data.Z;
  d.cluster_offsets = data.cluster_offsets;
  const auto view = vbmi::make_view(data.y, d);
  const auto hyper = vbmi::Hyperparameters::defaults(3);
  for (auto _ : st) benchmark::DoNotOptimize(vbmi::fit(view, hyper, {}));
}

}  // namespace

BENCHMARK(BM_gram_serial)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_gram_parallel)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_crossprod_serial)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_crossprod_parallel)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_matvec_serial)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_matvec_parallel)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_fit_desk)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
