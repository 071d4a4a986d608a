#pragma once

// Alternating deep model selection loop.
//
//   1. Train the full autoencoder on reconstruction loss.
//   2. Fit a mixture on the latent means (DPM, GMM or k-means, by loss kind).
//   3. With the mixture frozen, select each sample's component and train the
//      encoder on the clustering regularizer.
//   Steps 2-3 repeat `phases` times; a final refit labels the samples.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dms/divergence.hpp"
#include "dms/dpm.hpp"
#include "dms/gmm.hpp"
#include "dms/kmeans.hpp"
#include "dms/latent_net.hpp"

namespace dms {

enum class LossKind { kAbc, kKldGmm, kAjsdDpm };

std::string to_string(LossKind kind);
/// Accepts "abc", "kld" / "kld-gmm", "ajsd" / "ajsd-dpm" (case-insensitive).
LossKind parse_loss_kind(const std::string& text);

struct RunConfig {
  LossKind loss = LossKind::kAjsdDpm;
  double alpha = kDefaultAlpha;
  double lambda3 = 1.0;
  double learning_rate = 0.01;
  int mse_epochs = 50;
  int reg_epochs = 30;
  int phases = 3;
  int batch_size = 64;  // <= 0 means full batch
  int truncation = 50;  // DPM
  int clusters = 10;    // GMM / k-means
  DpmHyper hyper;
  bool m0_from_data = false;
  double prune_threshold = 0.01;
  int prune_every = 5;
  int mixture_iters = 200;
  std::vector<int> dims{512, 384, 256, 128};
  bool sigma_head = false;
  NetInit init = NetInit::kOrthogonal;
  std::uint64_t seed = 0;

  /// Throws ValidationError when a field is outside its domain.
  void validate() const;
  DpmOptions dpm_options() const;
  NetConfig net_config() const { return {dims, sigma_head, init}; }
};

struct Metric {
  std::string phase;
  int epoch;
  std::string name;
  double value;
};

struct PhaseTiming {
  std::string phase;
  double seconds;
};

struct TrainReport {
  LossKind loss = LossKind::kAjsdDpm;
  std::vector<Metric> metrics;
  std::vector<int> k_trajectory;  // one entry per mixture fit
  std::optional<DpmState> dpm;
  std::optional<GmmState> gmm;
  std::optional<KmeansResult> kmeans;
  LatentNet net;
  std::vector<int> assignments;  // final mixture labels
  std::vector<PhaseTiming> timings;

  int final_k() const { return k_trajectory.empty() ? 0 : k_trajectory.back(); }
};

/// Component maximising ln N(z | mean_k, precision_k) + ln weight_k over
/// active clusters (the weight term is skipped with `use_weights = false`).
DiagGaussian select_optimal_gmm(const Eigen::VectorXd& z, const GmmState& state,
                                bool use_weights = true);
int select_optimal_gmm_index(const Eigen::VectorXd& z, const GmmState& state,
                             bool use_weights = true);

/// Component chosen by the DPM assignment score, as (E[eta], 1/E[tau]).
DiagGaussian select_optimal_dpm(const Eigen::VectorXd& z, const DpmState& state);
int select_optimal_dpm_index(const Eigen::VectorXd& z, const DpmState& state);

struct AbcLoss {
  double loss;
  Eigen::VectorXd d_z;
};
/// lambda3 / 2 * ||nearest_mean - z||^2 and its gradient lambda3 (z - nearest_mean).
AbcLoss abc_loss(const Eigen::VectorXd& z, const Eigen::VectorXd& nearest_mean, double lambda3);

/// Latent means of every row of `data`, N x latent_dim.
Eigen::MatrixXd latent_means(const LatentNet& net, const Eigen::MatrixXd& data);

/// One epoch of reconstruction training; returns the mean per-sample loss.
double train_mse_epoch(LatentNet& net, const Eigen::MatrixXd& data, const RunConfig& config,
                       Rng& rng);

/// The frozen mixture a regularizer epoch pulls towards.
struct FrozenMixture {
  LossKind loss;
  const DpmState* dpm = nullptr;
  const GmmState* gmm = nullptr;
  const KmeansResult* kmeans = nullptr;
};

/// Mean regularizer value over all samples for the current net.
double mean_regularizer(const LatentNet& net, const Eigen::MatrixXd& data,
                        const FrozenMixture& mixture, const RunConfig& config);

/// One epoch of encoder training on the regularizer; returns the mean loss.
double train_regularizer_epoch(LatentNet& net, const Eigen::MatrixXd& data,
                               const FrozenMixture& mixture, const RunConfig& config, Rng& rng);

TrainReport train(const Eigen::MatrixXd& data, const RunConfig& config);

}  // namespace dms
