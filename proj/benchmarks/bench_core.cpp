#include <benchmark/benchmark.h>

#include <random>

#include "nkm/kernel.hpp"
#include "nkm/lssvm.hpp"
#include "nkm/network.hpp"
#include "nkm/nystrom.hpp"
#include "nkm/rff.hpp"
#include "nkm/rng.hpp"
#include "nkm/training.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  auto rng = nkm::make_rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = normal(rng);
  return M;
}

nkm::Network bench_network(int input_dim, int d_out, int features) {
  nkm::NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.num_classes = 3;
  nkm::BlockSpec bs;
  bs.m = 4;
  bs.d_out = d_out;
  bs.num_features = features;
  bs.pooling = nkm::Pooling::Maxout;
  spec.blocks = {bs, bs};
  return nkm::build_network(spec, 42);
}

void BM_KernelMatrix(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd X = random_matrix(n, 16, 1);
  for (auto _ : state) benchmark::DoNotOptimize(nkm::kernel_matrix(X, X, 1.0));
  state.SetComplexityN(n);
}

void BM_RFFApplyBatch(benchmark::State& state) {
  const auto D = state.range(0);
  const nkm::RFFMap map = nkm::RFFMap::create(64, static_cast<int>(D), 1.0, 2);
  const Eigen::MatrixXd P = random_matrix(64, 32, 3);
  for (auto _ : state) benchmark::DoNotOptimize(map.apply_batch(P));
}

void BM_NystromApplyRows(benchmark::State& state) {
  const auto m = state.range(0);
  const Eigen::MatrixXd proto = random_matrix(m, 16, 4);
  const nkm::NystromMap map = nkm::NystromMap::create(proto, 1.0);
  const Eigen::MatrixXd X = random_matrix(256, 16, 5);
  for (auto _ : state) benchmark::DoNotOptimize(map.apply_rows(X));
}

void BM_NetworkForward(benchmark::State& state) {
  const auto width = state.range(0);
  const nkm::Network net = bench_network(32, static_cast<int>(width),
                                         static_cast<int>(width) / 2);
  const Eigen::MatrixXd inputs = random_matrix(32, 32, 6);
  for (auto _ : state) benchmark::DoNotOptimize(nkm::network_forward(net, inputs));
}

void BM_BackwardStep(benchmark::State& state) {
  const auto width = state.range(0);
  const nkm::Network net = bench_network(32, static_cast<int>(width),
                                         static_cast<int>(width) / 2);
  const Eigen::MatrixXd inputs = random_matrix(32, 32, 7);
  Eigen::VectorXi labels(32);
  for (int i = 0; i < 32; ++i) labels(i) = i % 3;
  for (auto _ : state)
    benchmark::DoNotOptimize(nkm::backward(net, inputs, labels, 1e-4));
}

void BM_DualSolve(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd X = random_matrix(n, 8, 8);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = i % 2 ? 1.0 : -1.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(nkm::lssvm_dual_train(X, y, 10.0, 1.0));
}

}  // namespace

BENCHMARK(BM_KernelMatrix)->Arg(128)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RFFApplyBatch)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_NystromApplyRows)->Arg(32)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NetworkForward)->Arg(64)->Arg(256)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardStep)->Arg(64)->Arg(256)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DualSolve)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
