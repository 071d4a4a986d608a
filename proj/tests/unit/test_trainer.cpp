#include <doctest.h>

#include "dms/error.hpp"
#include "dms/features.hpp"
#include "dms/state_io.hpp"
#include "dms/trainer.hpp"
#include "support/oracles.hpp"

namespace {

dms::RunConfig small_config(dms::LossKind loss) {
  dms::RunConfig c;
  c.loss = loss;
  c.dims = {8, 6, 3};
  c.mse_epochs = 3;
  c.reg_epochs = 2;
  c.phases = 2;
  c.batch_size = 16;
  c.truncation = 8;
  c.clusters = 4;
  c.mixture_iters = 50;
  c.seed = 3;
  return c;
}

Eigen::MatrixXd small_data() {
  dms::SynthSpec spec;
  spec.k = 3;
  spec.dim = 8;
  spec.per_cluster = 30;
  spec.seed = 2;
  return dms::synth_mixture(spec).to_eigen();
}

}  // namespace

TEST_CASE("parse_loss_kind") {
  CHECK(dms::parse_loss_kind("ajsd") == dms::LossKind::kAjsdDpm);
  CHECK(dms::parse_loss_kind("KLD") == dms::LossKind::kKldGmm);
  CHECK(dms::parse_loss_kind("abc") == dms::LossKind::kAbc);
  CHECK_THROWS_AS(dms::parse_loss_kind("mse"), dms::ValidationError);
  CHECK(dms::to_string(dms::LossKind::kKldGmm) == "kld");
}

TEST_CASE("RunConfig validation") {
  dms::RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), dms::ValidationError);
  c = {};
  c.lambda3 = 2.0;
  CHECK_THROWS_AS(c.validate(), dms::ValidationError);
  c = {};
  c.dims = {4};
  CHECK_THROWS_AS(c.validate(), dms::ValidationError);
}

TEST_CASE("abc_loss value and gradient") {
  Eigen::VectorXd z(2), m(2);
  z << 1.0, 2.0;
  m << 0.0, 0.0;
  const auto r = dms::abc_loss(z, m, 0.5);
  CHECK(r.loss == doctest::Approx(1.25));
  CHECK(r.d_z(1) == doctest::Approx(1.0));
  CHECK(dms::abc_loss(m, m, 1.0).loss == 0.0);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd zz = z;
    const double fd = dms::oracle::central_difference(
        [&] { return dms::abc_loss(zz, m, 0.5).loss; }, &zz(i), 1e-6);
    CHECK(dms::oracle::relative_error(r.d_z(i), fd) <= 1e-6);
  }
}

TEST_CASE("select_optimal_gmm") {
  dms::GmmState s;
  s.means = Eigen::MatrixXd(2, 1);
  s.means << 0.0, 5.0;
  s.precisions = Eigen::MatrixXd::Ones(2, 1);
  s.weights = Eigen::VectorXd::Constant(2, 0.5);
  s.active = {true, true};
  CHECK(dms::select_optimal_gmm_index(Eigen::VectorXd::Constant(1, 4.9), s) == 1);
  CHECK(dms::select_optimal_gmm(Eigen::VectorXd::Constant(1, 0.1), s).mean()(0) == 0.0);

  // A broad component wins far from both means.
  s.precisions(1, 0) = 0.01;
  CHECK(dms::select_optimal_gmm_index(Eigen::VectorXd::Constant(1, -6.0), s) == 1);

  // Weights tilt a near tie; without them the closer mean wins.
  s.precisions.setOnes();
  s.weights << 0.999, 0.001;
  CHECK(dms::select_optimal_gmm_index(Eigen::VectorXd::Constant(1, 3.0), s) == 0);
  CHECK(dms::select_optimal_gmm_index(Eigen::VectorXd::Constant(1, 3.0), s, false) == 1);
}

TEST_CASE("select_optimal_dpm agrees with dpm_assign") {
  const auto z = small_data();
  const auto state = dms::fit_dpm(z, 8, {}, 100, 1);
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    const int k = dms::select_optimal_dpm_index(z.row(n).transpose(), state);
    CHECK(k == state.assignments[static_cast<std::size_t>(n)]);
    const auto g = dms::select_optimal_dpm(z.row(n).transpose(), state);
    CHECK(g.mean() == state.means.row(k).transpose());
    CHECK(g.variance()(0) == doctest::Approx(1.0 / state.precisions(k, 0)));
  }
}

TEST_CASE("train runs each loss kind") {
  const auto data = small_data();
  for (auto kind : {dms::LossKind::kAjsdDpm, dms::LossKind::kKldGmm, dms::LossKind::kAbc}) {
    CAPTURE(dms::to_string(kind));
    const auto cfg = small_config(kind);
    const auto report = dms::train(data, cfg);
    CHECK(report.assignments.size() == static_cast<std::size_t>(data.rows()));
    CHECK(report.k_trajectory.size() == static_cast<std::size_t>(cfg.phases + 1));
    CHECK(report.final_k() >= 1);
    CHECK(report.dpm.has_value() == (kind == dms::LossKind::kAjsdDpm));
    CHECK(report.gmm.has_value() == (kind == dms::LossKind::kKldGmm));
    CHECK(report.kmeans.has_value() == (kind == dms::LossKind::kAbc));
    for (const auto& m : report.metrics) CHECK(std::isfinite(m.value));
  }
}

TEST_CASE("train is deterministic and K-hat never grows for the DPM") {
  const auto data = small_data();
  const auto cfg = small_config(dms::LossKind::kAjsdDpm);
  const auto a = dms::train(data, cfg);
  const auto b = dms::train(data, cfg);
  CHECK(a.assignments == b.assignments);
  CHECK(a.k_trajectory == b.k_trajectory);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) CHECK(a.metrics[i].value == b.metrics[i].value);
  for (std::size_t i = 1; i < a.k_trajectory.size(); ++i) CHECK(a.k_trajectory[i] <= a.k_trajectory[i - 1]);
}

TEST_CASE("zero learning rate leaves the encoder untouched") {
  const auto data = small_data();
  auto cfg = small_config(dms::LossKind::kAjsdDpm);
  cfg.learning_rate = 0.0;
  const auto net = dms::LatentNet::random(cfg.net_config(), 1);
  auto copy = net;
  dms::Rng rng(1);
  const auto state = dms::fit_dpm(dms::latent_means(net, data), 8, {}, 50, 1);
  dms::FrozenMixture mix{cfg.loss, &state, nullptr, nullptr};
  dms::train_regularizer_epoch(copy, data, mix, cfg, rng);
  CHECK(copy.squared_norm() == net.squared_norm());
}

TEST_CASE("regularizer epochs reduce the regularizer") {
  const auto data = small_data();
  auto cfg = small_config(dms::LossKind::kAjsdDpm);
  cfg.learning_rate = 0.01;
  auto net = dms::LatentNet::random(cfg.net_config(), 2);
  dms::Rng rng(2);
  const auto state = dms::fit_dpm(dms::latent_means(net, data), 8, {}, 50, 1);
  dms::FrozenMixture mix{cfg.loss, &state, nullptr, nullptr};
  const double before = dms::mean_regularizer(net, data, mix, cfg);
  for (int e = 0; e < 5; ++e) dms::train_regularizer_epoch(net, data, mix, cfg, rng);
  CHECK(dms::mean_regularizer(net, data, mix, cfg) < before);
}

TEST_CASE("phase gating") {
  const auto data = small_data();
  auto cfg = small_config(dms::LossKind::kAjsdDpm);
  cfg.phases = 0;
  const auto mse_only = dms::train(data, cfg);

  auto no_reg = small_config(dms::LossKind::kAjsdDpm);
  no_reg.reg_epochs = 0;
  const auto a = dms::train(data, no_reg);
  CHECK(dms::serialize_net(a.net) == dms::serialize_net(mse_only.net));

  auto zero_lambda = small_config(dms::LossKind::kAjsdDpm);
  zero_lambda.lambda3 = 0.0;
  const auto b = dms::train(data, zero_lambda);
  CHECK(dms::serialize_net(b.net) == dms::serialize_net(mse_only.net));
}

TEST_CASE("ABC with one cluster contracts the codes") {
  const auto data = small_data();
  auto cfg = small_config(dms::LossKind::kAbc);
  cfg.clusters = 1;
  const auto net = dms::LatentNet::random(cfg.net_config(), 4);
  const auto spread = [&](const dms::LatentNet& n) {
    const Eigen::MatrixXd z = dms::latent_means(n, data);
    return (z.rowwise() - z.colwise().mean()).rowwise().norm().mean();
  };
  const auto km = dms::kmeans_lloyd(dms::latent_means(net, data), 1, 1);
  dms::FrozenMixture mix{cfg.loss, nullptr, nullptr, &km};
  auto trained = net;
  dms::Rng rng(4);
  double previous = spread(net);
  for (int e = 0; e < 5; ++e) {
    dms::train_regularizer_epoch(trained, data, mix, cfg, rng);
    const double now = spread(trained);
    CHECK(now < previous);
    previous = now;
  }
}

TEST_CASE("select_optimal_dpm uses stick terms and the active mask") {
  auto s = dms::DpmState::unfitted(2, 1, {});
  s.means << -1.0, 1.0;
  s.sticks << 0.9, 0.1;
  CHECK(dms::select_optimal_dpm_index(Eigen::VectorXd::Zero(1), s) == 0);
  s.active = {false, true};
  CHECK(dms::select_optimal_dpm_index(Eigen::VectorXd::Constant(1, -1.0), s) == 1);
  s.active = {false, false};
  CHECK_THROWS_AS(dms::select_optimal_dpm_index(Eigen::VectorXd::Zero(1), s), dms::DegenerateStateError);
}

TEST_CASE("select_optimal_gmm hand evaluation") {
  dms::GmmState s;
  s.means = Eigen::MatrixXd(2, 1);
  s.means << 0.0, 2.0;
  s.precisions = Eigen::MatrixXd(2, 1);
  s.precisions << 1e-4, 1e2;
  s.weights = Eigen::VectorXd::Constant(2, 0.5);
  s.active = {true, true};
  // z = 0.8: component 0 scores 0.5 ln 1e-4 - 0.5e-4 * 0.64 = -4.605;
  // component 1 scores 0.5 ln 1e2 - 50 * 1.44 = -69.70. Nearer mean wins.
  CHECK(dms::select_optimal_gmm_index(Eigen::VectorXd::Constant(1, 0.8), s) == 0);
  // z = 1.98: component 1 scores 2.303 - 0.02 = 2.283 and wins.
  CHECK(dms::select_optimal_gmm_index(Eigen::VectorXd::Constant(1, 1.98), s) == 1);

  dms::GmmState one;
  one.means = Eigen::MatrixXd::Constant(1, 1, 5.0);
  one.precisions = Eigen::MatrixXd::Ones(1, 1);
  one.weights = Eigen::VectorXd::Ones(1);
  one.active = {true};
  CHECK(dms::select_optimal_gmm_index(Eigen::VectorXd::Constant(1, -100.0), one) == 0);
}

TEST_CASE("divergent training is a runtime failure") {
  const auto data = small_data();
  auto cfg = small_config(dms::LossKind::kAbc);
  cfg.learning_rate = 1e6;
  try {
    dms::train(data * 1e3, cfg);
    FAIL("expected divergence");
  } catch (const dms::ValidationError&) {
    FAIL("reported as a validation error");
  } catch (const dms::Error&) {
  }
}
