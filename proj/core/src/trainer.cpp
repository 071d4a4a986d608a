#include "dms/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "dms/error.hpp"
#include "dms/rng.hpp"

namespace dms {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kAbc: return "abc";
    case LossKind::kKldGmm: return "kld";
    case LossKind::kAjsdDpm: return "ajsd";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "abc") return LossKind::kAbc;
  if (t == "kld" || t == "kld-gmm") return LossKind::kKldGmm;
  if (t == "ajsd" || t == "ajsd-dpm" || t == "alpha-jsd") return LossKind::kAjsdDpm;
  throw ValidationError("unknown loss kind '" + text + "' (expected abc, kld or ajsd)");
}

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("config: alpha must lie in (0, 1)");
  if (!(lambda3 >= 0.0 && lambda3 <= 1.0)) {
    throw ValidationError("config: lambda3 must lie in [0, 1]");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("config: learning_rate must be finite and >= 0");
  }
  if (mse_epochs < 0 || reg_epochs < 0 || phases < 0) {
    throw ValidationError("config: epoch and phase counts must be >= 0");
  }
  if (truncation < 1) throw ValidationError("config: truncation must be >= 1");
  if (clusters < 1) throw ValidationError("config: clusters must be >= 1");
  if (!(prune_threshold > 0.0 && prune_threshold < 1.0)) {
    throw ValidationError("config: prune_threshold must lie in (0, 1)");
  }
  if (prune_every < 1) throw ValidationError("config: prune_every must be >= 1");
  if (mixture_iters < 1) throw ValidationError("config: mixture_iters must be >= 1");
  if (dims.size() < 2) throw ValidationError("config: dims needs at least input and latent");
  for (int d : dims) {
    if (d < 1) throw ValidationError("config: dims entries must be >= 1");
  }
  hyper.validate();
}

DpmOptions RunConfig::dpm_options() const {
  DpmOptions o;
  o.prune_threshold = prune_threshold;
  o.prune_every = prune_every;
  o.prior_mean_from_data = m0_from_data;
  return o;
}

int select_optimal_gmm_index(const Eigen::VectorXd& z, const GmmState& state, bool use_weights) {
  if (state.num_clusters() < 1 || state.weights.size() != state.num_clusters()) {
    throw ValidationError("select_optimal_gmm: state is not fitted");
  }
  if (z.size() != state.dim()) throw ValidationError("select_optimal_gmm: dimension mismatch");
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < state.num_clusters(); ++k) {
    if (!state.active[static_cast<std::size_t>(k)]) continue;
    if (use_weights && state.weights[k] <= 0.0) continue;
    double score = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double tau = state.precisions(k, j);
      const double diff = z[j] - state.means(k, j);
      score += 0.5 * std::log(tau) - 0.5 * tau * diff * diff;
    }
    if (use_weights) score += std::log(state.weights[k]);
    if (best < 0 || score > best_score) {
      best = k;
      best_score = score;
    }
  }
  if (best < 0) throw DegenerateStateError("select_optimal_gmm: no active component");
  return best;
}

DiagGaussian select_optimal_gmm(const Eigen::VectorXd& z, const GmmState& state,
                                bool use_weights) {
  const int k = select_optimal_gmm_index(z, state, use_weights);
  return DiagGaussian::from_precision(state.means.row(k).transpose(),
                                      state.precisions.row(k).transpose());
}

int select_optimal_dpm_index(const Eigen::VectorXd& z, const DpmState& state) {
  if (z.size() != state.dim()) throw ValidationError("select_optimal_dpm: dimension mismatch");
  return dpm_best_cluster(state, z.transpose(), dpm_log_stick_prefix(state));
}

DiagGaussian select_optimal_dpm(const Eigen::VectorXd& z, const DpmState& state) {
  const int k = select_optimal_dpm_index(z, state);
  return DiagGaussian::from_precision(state.means.row(k).transpose(),
                                      state.precisions.row(k).transpose());
}

AbcLoss abc_loss(const Eigen::VectorXd& z, const Eigen::VectorXd& nearest_mean, double lambda3) {
  if (z.size() != nearest_mean.size()) throw ValidationError("abc_loss: dimension mismatch");
  const Eigen::VectorXd diff = z - nearest_mean;
  return {0.5 * lambda3 * diff.squaredNorm(), lambda3 * diff};
}

Eigen::MatrixXd latent_means(const LatentNet& net, const Eigen::MatrixXd& data) {
  Eigen::MatrixXd z(data.rows(), net.latent_dim());
  for (Eigen::Index n = 0; n < data.rows(); ++n) {
    z.row(n) = encode(net, data.row(n).transpose()).mu.transpose();
  }
  return z;
}

namespace {

std::vector<Eigen::Index> shuffled_order(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  return order;
}

std::size_t batch_width(const RunConfig& config, Eigen::Index n) {
  if (config.batch_size <= 0) return static_cast<std::size_t>(n);
  return static_cast<std::size_t>(std::min<Eigen::Index>(config.batch_size, n));
}

struct Regularized {
  double loss;
  Eigen::VectorXd d_mu;
  Eigen::VectorXd d_variance;
};

Regularized regularize_one(const LatentCode& code, const FrozenMixture& mixture,
                           const RunConfig& config) {
  switch (mixture.loss) {
    case LossKind::kAjsdDpm: {
      const auto component = select_optimal_dpm(code.mu, *mixture.dpm);
      auto r = regularizer_loss(code, component, config.alpha, config.lambda3);
      return {r.loss, std::move(r.d_mu), std::move(r.d_variance)};
    }
    case LossKind::kKldGmm: {
      const auto component = select_optimal_gmm(code.mu, *mixture.gmm);
      auto r = kld_regularizer_loss(code, component, config.lambda3);
      return {r.loss, std::move(r.d_mu), std::move(r.d_variance)};
    }
    case LossKind::kAbc: {
      const auto& centers = mixture.kmeans->centers;
      const int k = nearest_center(centers, code.mu.transpose());
      auto r = abc_loss(code.mu, centers.row(k).transpose(), config.lambda3);
      return {r.loss, std::move(r.d_z), Eigen::VectorXd::Zero(code.mu.size())};
    }
  }
  throw ValidationError("unknown loss kind");
}

int kmeans_k(const KmeansResult& km) {
  std::vector<bool> used(static_cast<std::size_t>(km.centers.rows()), false);
  for (int a : km.assignments) used[static_cast<std::size_t>(a)] = true;
  return static_cast<int>(std::count(used.begin(), used.end(), true));
}

int gmm_k(const GmmState& g) {
  std::vector<bool> used(static_cast<std::size_t>(g.num_clusters()), false);
  for (int a : g.assignments) used[static_cast<std::size_t>(a)] = true;
  int k = 0;
  for (int c = 0; c < g.num_clusters(); ++c) {
    if (used[static_cast<std::size_t>(c)] && g.active[static_cast<std::size_t>(c)]) ++k;
  }
  return k;
}

// Drops centers that lost every sample, so the cluster count never grows back.
KmeansResult compact_kmeans(KmeansResult km) {
  std::vector<int> remap(static_cast<std::size_t>(km.centers.rows()), -1);
  for (int a : km.assignments) remap[static_cast<std::size_t>(a)] = 0;
  int next = 0;
  for (auto& r : remap) {
    if (r == 0) r = next++;
  }
  Eigen::MatrixXd centers(next, km.centers.cols());
  for (Eigen::Index c = 0; c < km.centers.rows(); ++c) {
    if (remap[static_cast<std::size_t>(c)] >= 0) {
      centers.row(remap[static_cast<std::size_t>(c)]) = km.centers.row(c);
    }
  }
  for (auto& a : km.assignments) a = remap[static_cast<std::size_t>(a)];
  km.centers = std::move(centers);
  return km;
}

}  // namespace

double train_mse_epoch(LatentNet& net, const Eigen::MatrixXd& data, const RunConfig& config,
                       Rng& rng) {
  const auto order = shuffled_order(data.rows(), rng);
  const std::size_t width = batch_width(config, data.rows());
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += width) {
    const std::size_t end = std::min(order.size(), start + width);
    LatentNet grad = LatentNet::zeros_like(net);
    for (std::size_t i = start; i < end; ++i) {
      auto r = reconstruction_loss(net, data.row(order[i]).transpose());
      total += r.loss;
      grad.add_scaled(r.gradient, 1.0);
    }
    sgd_step(net, grad, config.learning_rate / static_cast<double>(end - start));
  }
  return total / static_cast<double>(data.rows());
}

double mean_regularizer(const LatentNet& net, const Eigen::MatrixXd& data,
                        const FrozenMixture& mixture, const RunConfig& config) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < data.rows(); ++n) {
    total += regularize_one(encode(net, data.row(n).transpose()), mixture, config).loss;
  }
  return total / static_cast<double>(data.rows());
}

double train_regularizer_epoch(LatentNet& net, const Eigen::MatrixXd& data,
                               const FrozenMixture& mixture, const RunConfig& config, Rng& rng) {
  const auto order = shuffled_order(data.rows(), rng);
  const std::size_t width = batch_width(config, data.rows());
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += width) {
    const std::size_t end = std::min(order.size(), start + width);
    LatentNet grad = LatentNet::zeros_like(net);
    for (std::size_t i = start; i < end; ++i) {
      const Eigen::VectorXd x = data.row(order[i]).transpose();
      const auto r = regularize_one(encode(net, x), mixture, config);
      total += r.loss;
      grad.add_scaled(encoder_backward(net, x, r.d_mu, r.d_variance), 1.0);
    }
    sgd_step(net, grad, config.learning_rate / static_cast<double>(end - start));
  }
  return total / static_cast<double>(data.rows());
}

TrainReport train(const Eigen::MatrixXd& data, const RunConfig& config) {
  config.validate();
  if (data.rows() < 1) throw ValidationError("train: no samples");
  if (!data.allFinite()) throw ValidationError("train: data contains non-finite values");
  if (data.cols() != config.dims.front()) {
    throw ValidationError("train: data has " + std::to_string(data.cols()) +
                          " columns but dims[0] is " + std::to_string(config.dims.front()));
  }
  if (config.loss != LossKind::kAjsdDpm && data.rows() < config.clusters) {
    throw ValidationError("train: fewer samples than clusters");
  }

  using Clock = std::chrono::steady_clock;
  TrainReport report;
  report.loss = config.loss;
  report.net = LatentNet::random(config.net_config(), derive_seed(config.seed, "net"));
  Rng shuffle(derive_seed(config.seed, "shuffle"));
  const std::uint64_t mixture_seed = derive_seed(config.seed, "mixture");
  const DpmOptions dpm_opts = config.dpm_options();

  auto timed = [&](const std::string& phase, auto&& body) {
    const auto t0 = Clock::now();
    body();
    report.timings.push_back(
        {phase, std::chrono::duration<double>(Clock::now() - t0).count()});
  };

  timed("mse", [&] {
    for (int e = 1; e <= config.mse_epochs; ++e) {
      const double loss = train_mse_epoch(report.net, data, config, shuffle);
      report.metrics.push_back({"mse", e, "loss", loss});
    }
  });

  auto fit_mixture = [&](const std::string& phase) {
    timed(phase, [&] {
      const Eigen::MatrixXd z = latent_means(report.net, data);
      if (!z.allFinite()) {
        throw Error("train: latent codes diverged before " + phase +
                    "; lower learning_rate or lambda3");
      }
      const int iters = config.mixture_iters;
      int k_hat = 0;
      switch (config.loss) {
        case LossKind::kAjsdDpm:
          report.dpm = report.dpm
                           ? refine_dpm(std::move(*report.dpm), z, iters, dpm_opts)
                           : fit_dpm(z, config.truncation, config.hyper, iters, mixture_seed,
                                     dpm_opts);
          k_hat = estimate_k(*report.dpm);
          report.assignments = report.dpm->assignments;
          break;
        case LossKind::kKldGmm:
          report.gmm = report.gmm ? refine_gmm(std::move(*report.gmm), z, iters)
                                  : fit_gmm(z, config.clusters, iters, mixture_seed);
          k_hat = gmm_k(*report.gmm);
          report.assignments = report.gmm->assignments;
          break;
        case LossKind::kAbc:
          report.kmeans = compact_kmeans(
              report.kmeans ? kmeans_from_centers(z, report.kmeans->centers, iters)
                            : kmeans_lloyd(z, config.clusters, mixture_seed, iters));
          k_hat = kmeans_k(*report.kmeans);
          report.assignments = report.kmeans->assignments;
          break;
      }
      report.k_trajectory.push_back(k_hat);
      report.metrics.push_back({phase, 0, "k_hat", static_cast<double>(k_hat)});
    });
  };

  for (int c = 1; c <= config.phases; ++c) {
    fit_mixture("fit-" + std::to_string(c));
    const FrozenMixture frozen{config.loss,
                               report.dpm ? &*report.dpm : nullptr,
                               report.gmm ? &*report.gmm : nullptr,
                               report.kmeans ? &*report.kmeans : nullptr};
    const std::string phase = "reg-" + std::to_string(c);
    timed(phase, [&] {
      for (int e = 1; e <= config.reg_epochs; ++e) {
        const double loss = train_regularizer_epoch(report.net, data, frozen, config, shuffle);
        report.metrics.push_back({phase, e, "loss", loss});
      }
    });
  }
  fit_mixture("final");
  return report;
}

}  // namespace dms
