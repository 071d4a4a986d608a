#include <benchmark/benchmark.h>

#include "dms/dpm.hpp"
#include "dms/features.hpp"
#include "dms/gmm.hpp"

namespace {

Eigen::MatrixXd blobs(int per_cluster) {
  dms::SynthSpec spec;
  spec.per_cluster = per_cluster;
  spec.seed = 11;
  return dms::synth_mixture(spec).to_eigen();
}

void BM_FitDpm(benchmark::State& state) {
  const Eigen::MatrixXd z = blobs(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto s = dms::fit_dpm(z, 20, {}, 100, 3);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * z.rows());
}
BENCHMARK(BM_FitDpm)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_FitGmm(benchmark::State& state) {
  const Eigen::MatrixXd z = blobs(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto s = dms::fit_gmm(z, 5, 100, 3);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * z.rows());
}
BENCHMARK(BM_FitGmm)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
