#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dms/dpm.hpp"
#include "dms/gmm.hpp"

namespace dms {

/// Minimum-cost assignment on a rows x cols cost matrix (rows <= cols or
/// rows > cols both accepted). Returns, for every row, its column or -1.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct LabeledAssignment {
  std::vector<int> predicted;
  std::vector<int> truth;

  void validate() const;
};

/// Confusion counts: rows are predicted clusters, columns true classes, both
/// relabelled to 0..n-1 in increasing order of the original ids.
Eigen::MatrixXd confusion_matrix(const LabeledAssignment& a);

/// Fraction of samples correct under the best one-to-one mapping from
/// predicted clusters to true classes.
double clustering_accuracy(const LabeledAssignment& a);

struct KReport {
  int k_hat;
  std::vector<int> sizes;  // occupants of each counted cluster, in cluster order
};

KReport estimated_k_report(const DpmState& state);
KReport estimated_k_report(const GmmState& state);

struct RunSummary {
  std::string method;
  double accuracy;
  int k_hat;
};

struct ComparisonRow {
  std::string method;
  double mean_accuracy;
  int modal_k;  // most frequent K-hat, smallest on ties
  int runs;
};

/// Groups runs by method in order of first appearance.
std::vector<ComparisonRow> summarize(const std::vector<RunSummary>& runs);

std::string format_table_aligned(const std::vector<ComparisonRow>& rows);
std::string format_table_delimited(const std::vector<ComparisonRow>& rows, char delimiter = '\t');

}  // namespace dms
