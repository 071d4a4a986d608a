#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "dms/divergence.hpp"

namespace {

std::pair<dms::DiagGaussian, dms::DiagGaussian> pair_of(Eigen::Index d) {
  Eigen::VectorXd m1 = Eigen::VectorXd::LinSpaced(d, -1.0, 1.0);
  Eigen::VectorXd m2 = Eigen::VectorXd::LinSpaced(d, 0.5, -0.5);
  Eigen::VectorXd v1 = Eigen::VectorXd::Constant(d, 0.7);
  Eigen::VectorXd v2 = Eigen::VectorXd::LinSpaced(d, 0.5, 2.0);
  return {dms::DiagGaussian(m1, v1), dms::DiagGaussian(m2, v2)};
}

void BM_Kld(benchmark::State& state) {
  const auto [a, b] = pair_of(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dms::kld_gaussian(a, b));
}
BENCHMARK(BM_Kld)->Arg(16)->Arg(128);

void BM_AlphaJsd(benchmark::State& state) {
  const auto [a, b] = pair_of(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dms::alpha_jsd(a, b));
}
BENCHMARK(BM_AlphaJsd)->Arg(16)->Arg(128);

void BM_AlphaJsdGradient(benchmark::State& state) {
  const auto [a, b] = pair_of(state.range(0));
  for (auto _ : state) {
    auto g = dms::alpha_jsd_with_gradient(a, b, dms::kDefaultAlpha);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_AlphaJsdGradient)->Arg(16)->Arg(128);

}  // namespace
