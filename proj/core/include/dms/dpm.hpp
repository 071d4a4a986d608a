#pragma once

// Truncated Dirichlet-process Gaussian mixture.
//
// Posterior expectations of the cluster means, precisions and stick
// fractions are updated in closed form; sample assignments are hard
// (one-hot argmax). Clusters whose stick-breaking weight becomes
// insignificant relative to the largest are pruned, and the number of
// surviving occupied clusters is the model-selection estimate K-hat.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace dms {

struct DpmHyper {
  double omega0 = 2000.0;  // Beta prior on stick fractions
  double a0 = 1.25;        // Gamma prior on precisions
  double b0 = 0.25;
  double m0 = 1.0;         // Gaussian prior on means
  double lambda0 = 0.5;

  void validate() const;
};

/// Upper clamp on stick fractions; keeps ln(1 - v) finite.
inline constexpr double kStickMax = 1.0 - 1e-9;
/// Floor applied to v inside logarithms only.
inline constexpr double kLogStickFloor = 1e-12;
/// Lower bound on precisions when the prior numerator is not positive.
inline constexpr double kPrecisionFloor = 1e-12;

struct DpmState {
  Eigen::MatrixXd means;       // T x d, E[eta]
  Eigen::MatrixXd precisions;  // T x d, E[tau]
  Eigen::VectorXd sticks;      // T, E[v]
  std::vector<int> assignments;
  std::vector<bool> active;
  DpmHyper hyper;
  Eigen::VectorXd prior_mean;  // d; m0 broadcast, or the data mean on request

  int iterations = 0;
  bool converged = false;
  long stick_clamp_events = 0;
  long precision_floor_events = 0;

  int truncation() const noexcept { return static_cast<int>(means.rows()); }
  int dim() const noexcept { return static_cast<int>(means.cols()); }
  int active_count() const noexcept;
  void validate(Eigen::Index num_points) const;

  /// All clusters active, means at the prior, no samples seen.
  static DpmState unfitted(int truncation, int dim, const DpmHyper& hyper);
};

struct DpmOptions {
  double prune_threshold = 0.01;  // relative to the largest stick weight
  int prune_every = 5;
  bool prior_mean_from_data = false;
  int kmeans_iters = 100;
};

Eigen::MatrixXd dpm_update_precision(const DpmState& state, const Eigen::MatrixXd& z,
                                     long* floor_events = nullptr);
Eigen::MatrixXd dpm_update_mean(const DpmState& state, const Eigen::MatrixXd& z);

/// Assignment score of cluster k for one sample:
/// -0.5 ||z - E[eta_k]||^2 + ln E[v_k] + sum_{l<k} ln(1 - E[v_l]).
/// `log_prefix[k]` must hold sum_{l<k} ln(1 - E[v_l]).
double dpm_score(const DpmState& state, const Eigen::Ref<const Eigen::RowVectorXd>& z, int k,
                 const Eigen::VectorXd& log_prefix);
Eigen::VectorXd dpm_log_stick_prefix(const DpmState& state);

/// Argmax of `dpm_score` over active clusters, lowest index on ties.
/// Throws DegenerateStateError when no cluster is active.
int dpm_best_cluster(const DpmState& state, const Eigen::Ref<const Eigen::RowVectorXd>& z,
                     const Eigen::VectorXd& log_prefix);
std::vector<int> dpm_assign(const DpmState& state, const Eigen::MatrixXd& z);

Eigen::VectorXd dpm_update_sticks(const DpmState& state, long* clamp_events = nullptr);

struct StickWeights {
  Eigen::VectorXd weights;  // pi_k = v_k prod_{l<k} (1 - v_l)
  double residual;          // prod_k (1 - v_k)
};
StickWeights stick_weights(const Eigen::VectorXd& sticks);

/// New active mask: clusters with pi_k < threshold * max_j pi_j drop out.
/// Already inactive clusters stay inactive. Never empties the mask.
std::vector<bool> prune_clusters(const DpmState& state, double threshold);

/// State initialised from k-means with `truncation` centers.
DpmState dpm_init(const Eigen::MatrixXd& z, int truncation, const DpmHyper& hyper,
                  std::uint64_t seed, const DpmOptions& options = {});

using DpmObserver = std::function<void(int iteration, const DpmState&)>;

/// Cycles assign, mean, precision, sticks and periodic pruning until the
/// assignments and active set stop changing, or `max_iters` passes.
DpmState refine_dpm(DpmState state, const Eigen::MatrixXd& z, int max_iters,
                    const DpmOptions& options = {}, const DpmObserver& observer = {});

DpmState fit_dpm(const Eigen::MatrixXd& z, int truncation, const DpmHyper& hyper, int max_iters,
                 std::uint64_t seed, const DpmOptions& options = {},
                 const DpmObserver& observer = {});

/// Active clusters with at least one sample, or the active count for a
/// state that has not seen data.
int estimate_k(const DpmState& state);

}  // namespace dms
