#pragma once

// Finite Gaussian mixture fitted with hard-assignment EM point estimates.
//
// The assignment rule scores clusters by ln(weight) - 0.5 * ||z - mean||^2,
// i.e. with a unit metric; precisions are estimated and reported but do not
// enter the assignment. Empty clusters freeze their parameters and drop out.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace dms {

inline constexpr double kGmmVarianceFloor = 1e-6;

struct GmmState {
  Eigen::MatrixXd means;       // K x d
  Eigen::MatrixXd precisions;  // K x d
  Eigen::VectorXd weights;     // K, sums to 1
  std::vector<int> assignments;
  std::vector<bool> active;    // false once a cluster has emptied
  int iterations = 0;
  bool converged = false;

  int num_clusters() const noexcept { return static_cast<int>(means.rows()); }
  int dim() const noexcept { return static_cast<int>(means.cols()); }
  /// Throws ValidationError when an invariant is broken.
  void validate(Eigen::Index num_points) const;
};

Eigen::MatrixXd gmm_update_precision(const GmmState& state, const Eigen::MatrixXd& z);
Eigen::MatrixXd gmm_update_mean(const GmmState& state, const Eigen::MatrixXd& z);
std::vector<int> gmm_assign(const GmmState& state, const Eigen::MatrixXd& z);
Eigen::VectorXd gmm_update_weights(const GmmState& state);

/// Sum over points of max_k { ln w_k - 0.5 ||z_n - mean_k||^2 } over active k.
double gmm_hard_objective(const GmmState& state, const Eigen::MatrixXd& z);

/// State built from an assignment vector: means, precisions and weights are
/// estimated from the assigned samples.
GmmState gmm_from_assignments(const Eigen::MatrixXd& z, int num_clusters,
                              std::vector<int> assignments);

using GmmObserver = std::function<void(int iteration, const GmmState&)>;

/// Iterate assign, mean, precision, weights until the assignments stop
/// changing or `max_iters` passes have run.
GmmState refine_gmm(GmmState state, const Eigen::MatrixXd& z, int max_iters,
                    const GmmObserver& observer = {});

/// k-means initialisation followed by `refine_gmm`.
GmmState fit_gmm(const Eigen::MatrixXd& z, int num_clusters, int max_iters, std::uint64_t seed,
                 const GmmObserver& observer = {});

}  // namespace dms
