#include "dms/kmeans.hpp"

#include <numeric>
#include <string>

#include "dms/error.hpp"
#include "dms/rng.hpp"

namespace dms {

int nearest_center(const Eigen::MatrixXd& centers,
                   const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  int best = 0;
  double best_dist = (centers.row(0) - x).squaredNorm();
  for (Eigen::Index k = 1; k < centers.rows(); ++k) {
    const double dist = (centers.row(k) - x).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(k);
    }
  }
  return best;
}

KmeansResult kmeans_from_centers(const Eigen::MatrixXd& z, Eigen::MatrixXd centers,
                                 int max_iters) {
  if (centers.rows() < 1 || centers.cols() != z.cols()) {
    throw ValidationError("kmeans: centers do not match data dimension");
  }
  const auto n = z.rows();
  const auto k = centers.rows();
  KmeansResult out;
  out.assignments.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest_center(centers, z.row(i));
      if (c != out.assignments[static_cast<std::size_t>(i)]) {
        out.assignments[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    out.iterations = it + 1;
    if (!changed) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, z.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = out.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += z.row(i);
      ++counts[c];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
  }
  out.centers = std::move(centers);
  return out;
}

KmeansResult kmeans_lloyd(const Eigen::MatrixXd& z, int k, std::uint64_t seed, int max_iters) {
  if (k < 1) throw ValidationError("kmeans: k must be >= 1");
  if (z.rows() < k) {
    throw ValidationError("kmeans: need at least k=" + std::to_string(k) + " points, got " +
                          std::to_string(z.rows()));
  }
  // Partial Fisher-Yates for k distinct indices.
  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(z.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::MatrixXd centers(k, z.cols());
  for (int c = 0; c < k; ++c) {
    const auto remaining = order.size() - static_cast<std::size_t>(c);
    const auto pick = static_cast<std::size_t>(c) + rng.index(remaining);
    std::swap(order[static_cast<std::size_t>(c)], order[pick]);
    centers.row(c) = z.row(order[static_cast<std::size_t>(c)]);
  }
  return kmeans_from_centers(z, std::move(centers), max_iters);
}

}  // namespace dms
