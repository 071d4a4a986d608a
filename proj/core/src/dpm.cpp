#include "dms/dpm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dms/error.hpp"
#include "dms/kmeans.hpp"

namespace dms {

namespace {

Eigen::VectorXd cluster_counts(const DpmState& state) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(state.truncation());
  for (int a : state.assignments) counts[a] += 1.0;
  return counts;
}

void require_points(const DpmState& state, const Eigen::MatrixXd& z) {
  if (static_cast<std::size_t>(z.rows()) != state.assignments.size()) {
    throw ValidationError("dpm: data has " + std::to_string(z.rows()) +
                          " rows but state holds " + std::to_string(state.assignments.size()) +
                          " assignments");
  }
  if (z.cols() != state.dim()) throw ValidationError("dpm: data dimension mismatch");
}

}  // namespace

void DpmHyper::validate() const {
  if (!(omega0 > 0.0) || !(a0 > 0.0) || !(b0 > 0.0) || !(lambda0 > 0.0) || !std::isfinite(m0)) {
    throw ValidationError("dpm: omega0, a0, b0 and lambda0 must be positive, m0 finite");
  }
}

int DpmState::active_count() const noexcept {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

void DpmState::validate(Eigen::Index num_points) const {
  const auto t = means.rows();
  if (t < 1) throw ValidationError("dpm: truncation must be >= 1");
  if (precisions.rows() != t || precisions.cols() != means.cols() || sticks.size() != t ||
      active.size() != static_cast<std::size_t>(t) || prior_mean.size() != means.cols()) {
    throw ValidationError("dpm: inconsistent state shapes");
  }
  if (num_points >= 0 && assignments.size() != static_cast<std::size_t>(num_points)) {
    throw ValidationError("dpm: assignment count mismatch");
  }
  for (int a : assignments) {
    if (a < 0 || a >= t) throw ValidationError("dpm: assignment index out of range");
  }
  if ((precisions.array() <= 0.0).any()) throw ValidationError("dpm: non-positive precision");
  if ((sticks.array() < 0.0).any() || (sticks.array() > 1.0).any()) {
    throw ValidationError("dpm: stick fraction outside [0, 1]");
  }
  hyper.validate();
}

DpmState DpmState::unfitted(int truncation, int dim, const DpmHyper& hyper) {
  if (truncation < 1 || dim < 1) throw ValidationError("dpm: truncation and dim must be >= 1");
  hyper.validate();
  DpmState s;
  s.hyper = hyper;
  s.prior_mean = Eigen::VectorXd::Constant(dim, hyper.m0);
  s.means = s.prior_mean.transpose().replicate(truncation, 1);
  const double prior_precision = std::max(hyper.a0 - 1.0, kPrecisionFloor) / hyper.b0;
  s.precisions = Eigen::MatrixXd::Constant(truncation, dim, prior_precision);
  s.sticks = Eigen::VectorXd::Zero(truncation);
  s.active.assign(static_cast<std::size_t>(truncation), true);
  return s;
}

Eigen::MatrixXd dpm_update_precision(const DpmState& state, const Eigen::MatrixXd& z,
                                     long* floor_events) {
  require_points(state, z);
  const auto& h = state.hyper;
  const Eigen::VectorXd counts = cluster_counts(state);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(state.truncation(), z.cols());
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    const int c = state.assignments[static_cast<std::size_t>(n)];
    sq.row(c) += (z.row(n) - state.means.row(c)).array().square().matrix();
  }
  Eigen::MatrixXd out(state.truncation(), z.cols());
  for (int c = 0; c < state.truncation(); ++c) {
    const double numerator = 0.5 * counts[c] + (h.a0 - 1.0);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double shrink = state.means(c, j) - state.prior_mean[j];
      const double denominator = h.b0 + 0.5 * (sq(c, j) + h.lambda0 * shrink * shrink);
      double value = numerator / denominator;
      if (!(value > kPrecisionFloor)) {
        value = kPrecisionFloor;
        if (floor_events) ++*floor_events;
      }
      out(c, j) = value;
    }
  }
  return out;
}

Eigen::MatrixXd dpm_update_mean(const DpmState& state, const Eigen::MatrixXd& z) {
  require_points(state, z);
  const auto& h = state.hyper;
  const Eigen::VectorXd counts = cluster_counts(state);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(state.truncation(), z.cols());
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    sums.row(state.assignments[static_cast<std::size_t>(n)]) += z.row(n);
  }
  Eigen::MatrixXd out(state.truncation(), z.cols());
  for (int c = 0; c < state.truncation(); ++c) {
    out.row(c) = (sums.row(c) + h.lambda0 * state.prior_mean.transpose()) / (counts[c] + h.lambda0);
  }
  return out;
}

Eigen::VectorXd dpm_log_stick_prefix(const DpmState& state) {
  Eigen::VectorXd prefix(state.truncation());
  double acc = 0.0;
  for (int k = 0; k < state.truncation(); ++k) {
    prefix[k] = acc;
    acc += std::log1p(-std::min(state.sticks[k], kStickMax));
  }
  return prefix;
}

double dpm_score(const DpmState& state, const Eigen::Ref<const Eigen::RowVectorXd>& z, int k,
                 const Eigen::VectorXd& log_prefix) {
  const double v = std::max(state.sticks[k], kLogStickFloor);
  return -0.5 * (z - state.means.row(k)).squaredNorm() + std::log(v) + log_prefix[k];
}

int dpm_best_cluster(const DpmState& state, const Eigen::Ref<const Eigen::RowVectorXd>& z,
                     const Eigen::VectorXd& log_prefix) {
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < state.truncation(); ++k) {
    if (!state.active[static_cast<std::size_t>(k)]) continue;
    const double score = dpm_score(state, z, k, log_prefix);
    if (best < 0 || score > best_score) {
      best = k;
      best_score = score;
    }
  }
  if (best < 0) throw DegenerateStateError("dpm: every cluster has been pruned");
  return best;
}

std::vector<int> dpm_assign(const DpmState& state, const Eigen::MatrixXd& z) {
  if (z.cols() != state.dim()) throw ValidationError("dpm_assign: data dimension mismatch");
  const Eigen::VectorXd prefix = dpm_log_stick_prefix(state);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    out[static_cast<std::size_t>(n)] = dpm_best_cluster(state, z.row(n), prefix);
  }
  return out;
}

Eigen::VectorXd dpm_update_sticks(const DpmState& state, long* clamp_events) {
  const Eigen::VectorXd counts = cluster_counts(state);
  const auto t = state.truncation();
  Eigen::VectorXd out(t);
  double later = 0.0;  // samples in clusters j > k
  for (auto k = t - 1; k >= 0; --k) {
    const double numerator = counts[k];
    const double denominator = later + state.hyper.omega0 - 1.0;
    double v = 0.0;
    if (numerator > 0.0) {
      v = denominator > 0.0 ? numerator / denominator : std::numeric_limits<double>::infinity();
      if (v > kStickMax) {
        v = kStickMax;
        if (clamp_events) ++*clamp_events;
      }
    }
    out[k] = v;
    later += counts[k];
  }
  return out;
}

StickWeights stick_weights(const Eigen::VectorXd& sticks) {
  StickWeights out{Eigen::VectorXd(sticks.size()), 1.0};
  for (Eigen::Index k = 0; k < sticks.size(); ++k) {
    out.weights[k] = sticks[k] * out.residual;
    out.residual *= 1.0 - sticks[k];
  }
  return out;
}

std::vector<bool> prune_clusters(const DpmState& state, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("prune_clusters: threshold must lie in (0, 1)");
  }
  const auto pi = stick_weights(state.sticks).weights;
  double max_pi = 0.0;
  int largest = -1;
  for (int k = 0; k < state.truncation(); ++k) {
    if (state.active[static_cast<std::size_t>(k)] && (largest < 0 || pi[k] > max_pi)) {
      max_pi = pi[k];
      largest = k;
    }
  }
  std::vector<bool> mask = state.active;
  if (largest < 0) return mask;
  for (int k = 0; k < state.truncation(); ++k) {
    if (mask[static_cast<std::size_t>(k)] && pi[k] < threshold * max_pi) {
      mask[static_cast<std::size_t>(k)] = false;
    }
  }
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    mask[static_cast<std::size_t>(largest)] = true;
  }
  return mask;
}

namespace {

void update_parameters(DpmState& state, const Eigen::MatrixXd& z) {
  state.means = dpm_update_mean(state, z);
  state.precisions = dpm_update_precision(state, z, &state.precision_floor_events);
  state.sticks = dpm_update_sticks(state, &state.stick_clamp_events);
}

// Returns true when the mask changed. Pruned sticks are zeroed straight away,
// which is what the stick update would give them once they hold no samples.
bool apply_prune(DpmState& state, double threshold) {
  auto mask = prune_clusters(state, threshold);
  if (mask == state.active) return false;
  state.active = std::move(mask);
  for (int k = 0; k < state.truncation(); ++k) {
    if (!state.active[static_cast<std::size_t>(k)]) state.sticks[k] = 0.0;
  }
  return true;
}

}  // namespace

DpmState dpm_init(const Eigen::MatrixXd& z, int truncation, const DpmHyper& hyper,
                  std::uint64_t seed, const DpmOptions& options) {
  if (z.rows() < 1) throw ValidationError("fit_dpm: need at least one sample");
  if (truncation < 1) throw ValidationError("fit_dpm: truncation must be >= 1");
  if (!z.allFinite()) throw ValidationError("fit_dpm: data contains non-finite values");
  // With fewer samples than the truncation level the surplus clusters start
  // empty; k-means runs on min(T, N) centers.
  const int k = std::min<Eigen::Index>(truncation, z.rows());
  DpmState state = DpmState::unfitted(truncation, static_cast<int>(z.cols()), hyper);
  if (options.prior_mean_from_data) state.prior_mean = z.colwise().mean().transpose();
  auto init = kmeans_lloyd(z, k, seed, options.kmeans_iters);
  state.assignments = std::move(init.assignments);
  update_parameters(state, z);
  return state;
}

DpmState refine_dpm(DpmState state, const Eigen::MatrixXd& z, int max_iters,
                    const DpmOptions& options, const DpmObserver& observer) {
  if (state.assignments.empty()) {
    state.assignments.assign(static_cast<std::size_t>(z.rows()), 0);
    state.assignments = dpm_assign(state, z);
    update_parameters(state, z);
  }
  state.validate(z.rows());
  if (options.prune_every < 1) throw ValidationError("fit_dpm: prune_every must be >= 1");
  state.converged = false;
  for (int it = 1; it <= max_iters; ++it) {
    auto next = dpm_assign(state, z);
    const bool stable = next == state.assignments;
    state.assignments = std::move(next);
    update_parameters(state, z);
    state.iterations = it;
    bool pruned = false;
    if (stable || it % options.prune_every == 0) pruned = apply_prune(state, options.prune_threshold);
    if (observer) observer(it, state);
    if (stable && !pruned) {
      state.converged = true;
      break;
    }
  }
  return state;
}

DpmState fit_dpm(const Eigen::MatrixXd& z, int truncation, const DpmHyper& hyper, int max_iters,
                 std::uint64_t seed, const DpmOptions& options, const DpmObserver& observer) {
  return refine_dpm(dpm_init(z, truncation, hyper, seed, options), z, max_iters, options,
                    observer);
}

int estimate_k(const DpmState& state) {
  if (state.assignments.empty()) return state.active_count();
  std::vector<bool> occupied(static_cast<std::size_t>(state.truncation()), false);
  for (int a : state.assignments) occupied[static_cast<std::size_t>(a)] = true;
  int k = 0;
  for (int c = 0; c < state.truncation(); ++c) {
    if (occupied[static_cast<std::size_t>(c)] && state.active[static_cast<std::size_t>(c)]) ++k;
  }
  return k;
}

}  // namespace dms
