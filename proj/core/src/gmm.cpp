#include "dms/gmm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dms/error.hpp"
#include "dms/kmeans.hpp"

namespace dms {

namespace {

Eigen::VectorXd cluster_counts(const GmmState& state) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(state.num_clusters());
  for (int a : state.assignments) counts[a] += 1.0;
  return counts;
}

void require_points(const GmmState& state, const Eigen::MatrixXd& z) {
  if (static_cast<std::size_t>(z.rows()) != state.assignments.size()) {
    throw ValidationError("gmm: data has " + std::to_string(z.rows()) +
                          " rows but state holds " + std::to_string(state.assignments.size()) +
                          " assignments");
  }
  if (z.cols() != state.dim()) throw ValidationError("gmm: data dimension mismatch");
}

}  // namespace

void GmmState::validate(Eigen::Index num_points) const {
  const auto k = means.rows();
  if (k < 1) throw ValidationError("gmm: no clusters");
  if (precisions.rows() != k || precisions.cols() != means.cols() || weights.size() != k ||
      active.size() != static_cast<std::size_t>(k)) {
    throw ValidationError("gmm: inconsistent state shapes");
  }
  if (num_points >= 0 && assignments.size() != static_cast<std::size_t>(num_points)) {
    throw ValidationError("gmm: assignment count mismatch");
  }
  for (int a : assignments) {
    if (a < 0 || a >= k) throw ValidationError("gmm: assignment index out of range");
  }
  if ((precisions.array() <= 0.0).any()) throw ValidationError("gmm: non-positive precision");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw ValidationError("gmm: weights do not sum to 1");
}

Eigen::MatrixXd gmm_update_precision(const GmmState& state, const Eigen::MatrixXd& z) {
  require_points(state, z);
  const auto k = state.num_clusters();
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(k, z.cols());
  const Eigen::VectorXd counts = cluster_counts(state);
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    const int c = state.assignments[static_cast<std::size_t>(n)];
    sq.row(c) += (z.row(n) - state.means.row(c)).array().square().matrix();
  }
  Eigen::MatrixXd out = state.precisions;
  for (int c = 0; c < k; ++c) {
    if (counts[c] == 0.0) continue;  // frozen
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double variance = std::max(sq(c, j) / counts[c], kGmmVarianceFloor);
      out(c, j) = 1.0 / variance;
    }
  }
  return out;
}

Eigen::MatrixXd gmm_update_mean(const GmmState& state, const Eigen::MatrixXd& z) {
  require_points(state, z);
  const auto k = state.num_clusters();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, z.cols());
  const Eigen::VectorXd counts = cluster_counts(state);
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    sums.row(state.assignments[static_cast<std::size_t>(n)]) += z.row(n);
  }
  Eigen::MatrixXd out = state.means;
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0.0) out.row(c) = sums.row(c) / counts[c];
  }
  return out;
}

std::vector<int> gmm_assign(const GmmState& state, const Eigen::MatrixXd& z) {
  if (z.cols() != state.dim()) throw ValidationError("gmm_assign: data dimension mismatch");
  std::vector<int> out(static_cast<std::size_t>(z.rows()), 0);
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < state.num_clusters(); ++c) {
      if (!state.active[static_cast<std::size_t>(c)] || state.weights[c] <= 0.0) continue;
      const double score =
          std::log(state.weights[c]) - 0.5 * (z.row(n) - state.means.row(c)).squaredNorm();
      if (best < 0 || score > best_score) {
        best = c;
        best_score = score;
      }
    }
    if (best < 0) throw DegenerateStateError("gmm_assign: no active cluster");
    out[static_cast<std::size_t>(n)] = best;
  }
  return out;
}

Eigen::VectorXd gmm_update_weights(const GmmState& state) {
  if (state.assignments.empty()) throw ValidationError("gmm_update_weights: no samples");
  return cluster_counts(state) / static_cast<double>(state.assignments.size());
}

double gmm_hard_objective(const GmmState& state, const Eigen::MatrixXd& z) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < state.num_clusters(); ++c) {
      if (!state.active[static_cast<std::size_t>(c)] || state.weights[c] <= 0.0) continue;
      best = std::max(best, std::log(state.weights[c]) -
                                0.5 * (z.row(n) - state.means.row(c)).squaredNorm());
    }
    total += best;
  }
  return total;
}

GmmState gmm_from_assignments(const Eigen::MatrixXd& z, int num_clusters,
                              std::vector<int> assignments) {
  if (num_clusters < 1) throw ValidationError("gmm: K must be >= 1");
  if (assignments.size() != static_cast<std::size_t>(z.rows())) {
    throw ValidationError("gmm: assignment count mismatch");
  }
  GmmState state;
  state.means = Eigen::MatrixXd::Zero(num_clusters, z.cols());
  state.precisions = Eigen::MatrixXd::Ones(num_clusters, z.cols());
  state.weights = Eigen::VectorXd::Constant(num_clusters, 1.0 / num_clusters);
  state.active.assign(static_cast<std::size_t>(num_clusters), true);
  state.assignments = std::move(assignments);
  for (int a : state.assignments) {
    if (a < 0 || a >= num_clusters) throw ValidationError("gmm: assignment index out of range");
  }
  state.means = gmm_update_mean(state, z);
  state.precisions = gmm_update_precision(state, z);
  state.weights = gmm_update_weights(state);
  for (int c = 0; c < num_clusters; ++c) {
    state.active[static_cast<std::size_t>(c)] = state.weights[c] > 0.0;
  }
  return state;
}

GmmState refine_gmm(GmmState state, const Eigen::MatrixXd& z, int max_iters,
                    const GmmObserver& observer) {
  state.validate(z.rows());
  state.converged = false;
  for (int it = 1; it <= max_iters; ++it) {
    auto next = gmm_assign(state, z);
    state.iterations = it;
    if (next == state.assignments) {
      state.converged = true;
      if (observer) observer(it, state);
      break;
    }
    state.assignments = std::move(next);
    state.means = gmm_update_mean(state, z);
    state.precisions = gmm_update_precision(state, z);
    state.weights = gmm_update_weights(state);
    for (int c = 0; c < state.num_clusters(); ++c) {
      if (state.weights[c] == 0.0) state.active[static_cast<std::size_t>(c)] = false;
    }
    if (observer) observer(it, state);
  }
  return state;
}

GmmState fit_gmm(const Eigen::MatrixXd& z, int num_clusters, int max_iters, std::uint64_t seed,
                 const GmmObserver& observer) {
  if (num_clusters < 1) throw ValidationError("fit_gmm: K must be >= 1");
  if (z.rows() < num_clusters) {
    throw ValidationError("fit_gmm: N=" + std::to_string(z.rows()) + " is smaller than K=" +
                          std::to_string(num_clusters));
  }
  auto init = kmeans_lloyd(z, num_clusters, seed);
  return refine_gmm(gmm_from_assignments(z, num_clusters, std::move(init.assignments)), z,
                    max_iters, observer);
}

}  // namespace dms
