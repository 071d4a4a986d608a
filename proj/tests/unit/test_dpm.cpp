#include <doctest.h>

#include <cmath>

#include "dms/dpm.hpp"
#include "dms/error.hpp"
#include "dms/eval.hpp"
#include "dms/features.hpp"
#include "dms/rng.hpp"

namespace {

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) z(i++, 0) = x;
  return z;
}

dms::DpmState state_with(int t, int d, std::vector<int> assignments, dms::DpmHyper h = {}) {
  auto s = dms::DpmState::unfitted(t, d, h);
  s.assignments = std::move(assignments);
  return s;
}

dms::FeatureMatrix five_blobs(std::uint64_t seed, double separation = 8.0) {
  dms::SynthSpec spec;
  spec.k = 5;
  spec.dim = 16;
  spec.per_cluster = 200;
  spec.separation = separation;
  spec.seed = seed;
  return dms::synth_mixture(spec);
}

}  // namespace

TEST_CASE("dpm_update_precision") {
  dms::DpmHyper h;  // a0 = 1.25, b0 = 0.25, m0 = 1, lambda0 = 0.5
  SUBCASE("empty cluster at the prior mean gives the prior value") {
    auto s = state_with(2, 1, {0, 0});
    s.means(1, 0) = h.m0;
    const auto tau = dms::dpm_update_precision(s, column({0.0, 3.0}));
    CHECK(tau(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("one cluster, symmetric data, prior at zero") {
    dms::DpmHyper h0 = h;
    h0.m0 = 0.0;
    auto s = state_with(1, 1, {0, 0}, h0);
    s.means(0, 0) = 0.0;
    const auto tau = dms::dpm_update_precision(s, column({-1.0, 1.0}));
    CHECK(tau(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("wider spread lowers the precision") {
    auto s = state_with(1, 1, {0, 0});
    s.means(0, 0) = 0.0;
    const double narrow = dms::dpm_update_precision(s, column({-1.0, 1.0}))(0, 0);
    const double wide = dms::dpm_update_precision(s, column({-2.0, 2.0}))(0, 0);
    CHECK(wide < narrow);
  }
  SUBCASE("a0 <= 1 with an empty cluster is floored and counted") {
    dms::DpmHyper low = h;
    low.a0 = 0.5;
    auto s = state_with(2, 1, {0});
    long events = 0;
    const auto tau = dms::dpm_update_precision(s, column({0.0}), &events);
    CHECK(tau(1, 0) == doctest::Approx(1.0));
    CHECK(events == 0);
    s.hyper = low;
    const auto tau2 = dms::dpm_update_precision(s, column({0.0}), &events);
    CHECK(tau2(1, 0) == dms::kPrecisionFloor);
    CHECK(tau2(0, 0) == dms::kPrecisionFloor);  // a0 + n/2 - 1 = 0 for the single sample
    CHECK(events == 2);
  }
}

TEST_CASE("dpm_update_mean") {
  auto s = state_with(2, 1, {0});
  const auto m = dms::dpm_update_mean(s, column({4.0}));
  CHECK(m(0, 0) == doctest::Approx(3.0).epsilon(1e-15));  // (4 + 0.5) / 1.5
  CHECK(m(1, 0) == 1.0);                                  // empty: prior mean

  dms::DpmHyper tiny;
  tiny.lambda0 = 1e-12;
  auto t = state_with(1, 1, {0, 0, 0}, tiny);
  CHECK(dms::dpm_update_mean(t, column({1.0, 2.0, 6.0}))(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("dpm_assign") {
  auto s = state_with(2, 1, {0, 0});
  s.means << 0.0, 4.0;
  s.sticks << 0.5, 0.5;
  CHECK(dms::dpm_assign(s, column({0.0}))[0] == 0);

  SUBCASE("stick terms shift the boundary towards the second cluster") {
    s.sticks << 0.9, 0.9;
    // score_1 - score_0 = 4z - 8 + ln 0.1, zero at z = 2 - ln(0.1) / 4.
    const double z_star = 2.0 - std::log(0.1) / 4.0;
    const auto a = dms::dpm_assign(s, column({2.3, z_star - 0.01, z_star + 0.01}));
    CHECK(a[0] == 0);  // past the unweighted midpoint, still cluster 0
    CHECK(a[1] == 0);
    CHECK(a[2] == 1);
  }
  SUBCASE("zero stick is never chosen") {
    s.sticks << 0.5, 0.0;
    CHECK(dms::dpm_assign(s, column({4.0}))[0] == 0);
  }
  SUBCASE("no active cluster") {
    s.active = {false, false};
    CHECK_THROWS_AS(dms::dpm_assign(s, column({0.0})), dms::DegenerateStateError);
  }
}

TEST_CASE("dpm_update_sticks") {
  auto s = state_with(3, 1, std::vector<int>(100, 0));
  const auto v = dms::dpm_update_sticks(s);
  CHECK(v[0] == doctest::Approx(100.0 / 1999.0).epsilon(1e-15));
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 0.0);

  dms::DpmHyper small;
  small.omega0 = 1.0;
  std::vector<int> a(10, 0);
  a[9] = 2;
  auto t = state_with(3, 1, a, small);
  long clamps = 0;
  const auto w = dms::dpm_update_sticks(t, &clamps);
  CHECK(w[0] == dms::kStickMax);  // 9 / 1
  CHECK(w[2] == dms::kStickMax);  // 1 / 0
  CHECK(w[2] < 1.0);
  CHECK(clamps == 2);
}

TEST_CASE("stick_weights") {
  Eigen::VectorXd v(3);
  v << 1.0, 0.3, 0.7;
  auto r = dms::stick_weights(v);
  CHECK(r.weights[0] == 1.0);
  CHECK(r.weights[1] == 0.0);
  CHECK(r.residual == 0.0);

  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  r = dms::stick_weights(half);
  CHECK(r.weights[0] == 0.5);
  CHECK(r.weights[1] == 0.25);
  CHECK(r.residual == 0.25);

  r = dms::stick_weights(Eigen::VectorXd::Zero(4));
  CHECK(r.weights.sum() == 0.0);
  CHECK(r.residual == 1.0);

  dms::Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd s(1 + static_cast<Eigen::Index>(rng.index(30)));
    for (auto& x : s) x = rng.uniform();
    const auto w = dms::stick_weights(s);
    CHECK(std::abs(w.weights.sum() + w.residual - 1.0) <= 1e-12);
  }
}

TEST_CASE("prune_clusters") {
  auto s = state_with(4, 1, {});
  s.sticks << 0.9, 1e-5, 1e-6, 0.0;
  auto mask = dms::prune_clusters(s, 0.01);
  CHECK(mask == std::vector<bool>{true, false, false, false});

  // Uniform stick weights over 5 clusters: v_k = 1 / (6 - k).
  auto u = state_with(5, 1, {});
  u.sticks << 1.0 / 6, 1.0 / 5, 1.0 / 4, 1.0 / 3, 1.0 / 2;
  const auto pi = dms::stick_weights(u.sticks).weights;
  for (int k = 0; k < 5; ++k) CHECK(pi[k] == doctest::Approx(1.0 / 6));
  mask = dms::prune_clusters(u, 0.01);
  CHECK(std::count(mask.begin(), mask.end(), true) == 5);

  auto z = state_with(3, 1, {});
  z.sticks.setZero();
  mask = dms::prune_clusters(z, 0.5);
  CHECK(std::count(mask.begin(), mask.end(), true) >= 1);

  CHECK_THROWS_AS(dms::prune_clusters(s, 0.0), dms::ValidationError);
  CHECK_THROWS_AS(dms::prune_clusters(s, 1.0), dms::ValidationError);
}

TEST_CASE("fit_dpm on five separated blobs") {
  const auto fm = five_blobs(7);
  const auto z = fm.to_eigen();
  int previous_active = 20;
  const auto s = dms::fit_dpm(z, 20, {}, 300, 7, {}, [&](int, const dms::DpmState& st) {
    CHECK(st.active_count() <= previous_active);
    previous_active = st.active_count();
    const auto w = dms::stick_weights(st.sticks);
    CHECK(std::abs(w.weights.sum() + w.residual - 1.0) <= 1e-9);
  });
  CHECK(s.converged);
  CHECK(dms::estimate_k(s) == 5);
  CHECK(dms::clustering_accuracy({s.assignments, *fm.labels}) >= 0.95);
  CHECK(dms::dpm_assign(s, z) == s.assignments);
  const auto report = dms::estimated_k_report(s);
  CHECK(report.k_hat == 5);
  for (int size : report.sizes) CHECK(std::abs(size - 200) <= 10);
}

TEST_CASE("fit_dpm on a single blob") {
  dms::SynthSpec spec;
  spec.k = 1;
  spec.dim = 16;
  spec.per_cluster = 500;
  spec.seed = 3;
  const auto z = dms::synth_mixture(spec).to_eigen();
  const auto s = dms::fit_dpm(z, 10, {}, 300, 3);
  CHECK(dms::estimate_k(s) == 1);

  const auto one = dms::fit_dpm(z, 1, {}, 50, 3);
  CHECK(dms::estimate_k(one) == 1);
  const double n = static_cast<double>(z.rows());
  const Eigen::RowVectorXd shrunk = (z.colwise().sum().array() + 0.5 * 1.0).matrix() / (n + 0.5);
  CHECK((one.means.row(0) - shrunk).norm() < 1e-9);
}

TEST_CASE("estimate_k edge cases") {
  const auto fresh = dms::DpmState::unfitted(7, 2, {});
  CHECK(dms::estimate_k(fresh) == 7);
  CHECK(dms::estimated_k_report(fresh).k_hat == 7);
  auto one = state_with(4, 1, {2, 2, 2});
  CHECK(dms::estimate_k(one) == 1);
}

TEST_CASE("prior recovery for clusters without data") {
  const auto z = column({5.0, 5.5, 6.0});
  auto s = state_with(3, 1, {0, 0, 0});
  s.means(2, 0) = -7.0;
  const auto m = dms::dpm_update_mean(s, z);
  CHECK(m(2, 0) == s.hyper.m0);
  s.means = m;
  const auto tau = dms::dpm_update_precision(s, z);
  CHECK(tau(2, 0) == (s.hyper.a0 - 1.0) / s.hyper.b0);
}

TEST_CASE("fit_dpm determinism and data-centred prior") {
  const auto z = five_blobs(2).to_eigen();
  const auto a = dms::fit_dpm(z, 20, {}, 100, 5);
  const auto b = dms::fit_dpm(z, 20, {}, 100, 5);
  CHECK(a.means == b.means);
  CHECK(a.assignments == b.assignments);
  dms::DpmOptions opts;
  opts.prior_mean_from_data = true;
  const auto c = dms::fit_dpm(z, 20, {}, 100, 5, opts);
  CHECK((c.prior_mean.transpose() - z.colwise().mean()).norm() < 1e-12);
}
