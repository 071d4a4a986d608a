#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace dms {

struct KmeansResult {
  Eigen::MatrixXd centers;  // k x d
  std::vector<int> assignments;
  int iterations = 0;
  bool converged = false;
};

/// Lloyd iterations from k distinct data points drawn uniformly with `seed`.
/// Empty clusters keep their previous center. Ties go to the lowest index.
KmeansResult kmeans_lloyd(const Eigen::MatrixXd& z, int k, std::uint64_t seed,
                          int max_iters = 100);

/// Lloyd iterations from the given centers.
KmeansResult kmeans_from_centers(const Eigen::MatrixXd& z, Eigen::MatrixXd centers,
                                 int max_iters = 100);

/// Index of the nearest row of `centers` (squared Euclidean, lowest index on ties).
int nearest_center(const Eigen::MatrixXd& centers, const Eigen::Ref<const Eigen::RowVectorXd>& x);

}  // namespace dms
