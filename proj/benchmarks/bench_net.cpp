#include <benchmark/benchmark.h>

#include "dms/latent_net.hpp"
#include "dms/rng.hpp"

namespace {

void BM_ReconstructionLoss(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto net = dms::LatentNet::random({{d, d * 3 / 4, d / 2, d / 4}, false}, 5);
  dms::Rng rng(9);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = rng.normal();
  for (auto _ : state) {
    auto r = dms::reconstruction_loss(net, x);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ReconstructionLoss)->Arg(16)->Arg(512);

void BM_RegularizerBackward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto net = dms::LatentNet::random({{d, d * 3 / 4, d / 2, d / 4}, true}, 5);
  dms::Rng rng(9);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = rng.normal();
  const dms::DiagGaussian component(Eigen::VectorXd::Zero(d / 4), Eigen::VectorXd::Ones(d / 4));
  for (auto _ : state) {
    const auto code = dms::encode(net, x);
    const auto r = dms::regularizer_loss(code, component, dms::kDefaultAlpha, 1.0);
    auto g = dms::encoder_backward(net, x, r.d_mu, r.d_variance);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_RegularizerBackward)->Arg(16)->Arg(512);

}  // namespace
