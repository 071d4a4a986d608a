#include <benchmark/benchmark.h>

#include <vector>

#include "dms/eval.hpp"
#include "dms/rng.hpp"

namespace {

void BM_SolveAssignment(benchmark::State& state) {
  const auto n = state.range(0);
  dms::Rng rng(4);
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = rng.uniform();
  for (auto _ : state) {
    auto a = dms::solve_assignment(cost);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_SolveAssignment)->Arg(10)->Arg(100)->Arg(400);

void BM_ClusteringAccuracy(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  dms::Rng rng(4);
  dms::LabeledAssignment a;
  for (int i = 0; i < n; ++i) {
    a.truth.push_back(static_cast<int>(rng.index(10)));
    a.predicted.push_back(static_cast<int>(rng.index(12)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(dms::clustering_accuracy(a));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ClusteringAccuracy)->Arg(1000)->Arg(70000);

}  // namespace
