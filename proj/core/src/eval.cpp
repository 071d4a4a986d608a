#include "dms/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "dms/error.hpp"

namespace dms {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Shortest augmenting path with potentials (Jonker-Volgenant style) on the
  // zero-padded square matrix, 1-based with a sentinel column 0.
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();
  const Eigen::Index n = std::max(rows, cols);
  std::vector<int> result(static_cast<std::size_t>(rows), -1);
  if (n == 0) return result;
  auto at = [&](Eigen::Index i, Eigen::Index j) {
    return (i < rows && j < cols) ? cost(i, j) : 0.0;
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto sz = static_cast<std::size_t>(n) + 1;
  std::vector<double> u(sz, 0.0), v(sz, 0.0);
  std::vector<Eigen::Index> match(sz, 0), way(sz, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(sz, inf);
    std::vector<bool> used(sz, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Eigen::Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js]) continue;
        const double cur = at(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[js];
        if (cur < minv[js]) {
          minv[js] = cur;
          way[js] = j0;
        }
        if (minv[js] < delta) {
          delta = minv[js];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js]) {
          u[static_cast<std::size_t>(match[js])] += delta;
          v[js] -= delta;
        } else {
          minv[js] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Eigen::Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  for (Eigen::Index j = 1; j <= n; ++j) {
    const Eigen::Index i = match[static_cast<std::size_t>(j)] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) result[static_cast<std::size_t>(i)] = static_cast<int>(j - 1);
  }
  return result;
}

void LabeledAssignment::validate() const {
  if (predicted.empty()) throw ValidationError("accuracy: no samples");
  if (predicted.size() != truth.size()) {
    throw ValidationError("accuracy: predicted has " + std::to_string(predicted.size()) +
                          " entries, truth " + std::to_string(truth.size()));
  }
  for (int c : predicted) {
    if (c < 0) throw ValidationError("accuracy: negative cluster index " + std::to_string(c));
  }
}

namespace {

std::map<int, int> compact_ids(const std::vector<int>& ids) {
  std::map<int, int> index;
  for (int id : ids) index.emplace(id, 0);
  int next = 0;
  for (auto& [id, slot] : index) slot = next++;
  return index;
}

}  // namespace

Eigen::MatrixXd confusion_matrix(const LabeledAssignment& a) {
  a.validate();
  const auto pred_ids = compact_ids(a.predicted);
  const auto true_ids = compact_ids(a.truth);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pred_ids.size()),
                                            static_cast<Eigen::Index>(true_ids.size()));
  for (std::size_t n = 0; n < a.predicted.size(); ++n) {
    m(pred_ids.at(a.predicted[n]), true_ids.at(a.truth[n])) += 1.0;
  }
  return m;
}

double clustering_accuracy(const LabeledAssignment& a) {
  const Eigen::MatrixXd counts = confusion_matrix(a);
  // Maximise matches == minimise (max - count). Padding rows/columns cost 0
  // in the solver, i.e. contribute no correct samples.
  const double top = counts.maxCoeff();
  const auto match = solve_assignment((top - counts.array()).matrix());
  double correct = 0.0;
  for (std::size_t r = 0; r < match.size(); ++r) {
    if (match[r] >= 0) correct += counts(static_cast<Eigen::Index>(r), match[r]);
  }
  return correct / static_cast<double>(a.predicted.size());
}

KReport estimated_k_report(const DpmState& state) {
  KReport r{estimate_k(state), {}};
  if (state.assignments.empty()) return r;
  std::vector<int> counts(static_cast<std::size_t>(state.truncation()), 0);
  for (int a : state.assignments) ++counts[static_cast<std::size_t>(a)];
  for (int k = 0; k < state.truncation(); ++k) {
    if (state.active[static_cast<std::size_t>(k)] && counts[static_cast<std::size_t>(k)] > 0) {
      r.sizes.push_back(counts[static_cast<std::size_t>(k)]);
    }
  }
  return r;
}

KReport estimated_k_report(const GmmState& state) {
  KReport r{0, {}};
  std::vector<int> counts(static_cast<std::size_t>(state.num_clusters()), 0);
  for (int a : state.assignments) ++counts[static_cast<std::size_t>(a)];
  for (int k = 0; k < state.num_clusters(); ++k) {
    if (state.active[static_cast<std::size_t>(k)] && counts[static_cast<std::size_t>(k)] > 0) {
      r.sizes.push_back(counts[static_cast<std::size_t>(k)]);
    }
  }
  r.k_hat = static_cast<int>(r.sizes.size());
  if (state.assignments.empty()) r.k_hat = state.num_clusters();
  return r;
}

std::vector<ComparisonRow> summarize(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw ValidationError("summarize: no runs");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunSummary*>> groups;
  for (const auto& r : runs) {
    auto [it, inserted] = groups.try_emplace(r.method);
    if (inserted) order.push_back(r.method);
    it->second.push_back(&r);
  }
  std::vector<ComparisonRow> rows;
  for (const auto& method : order) {
    const auto& g = groups.at(method);
    double acc = 0.0;
    std::map<int, int> k_counts;
    for (const auto* r : g) {
      acc += r->accuracy;
      ++k_counts[r->k_hat];
    }
    int modal = k_counts.begin()->first;
    int best = 0;
    for (const auto& [k, c] : k_counts) {
      if (c > best) {
        best = c;
        modal = k;
      }
    }
    rows.push_back({method, acc / static_cast<double>(g.size()), modal, static_cast<int>(g.size())});
  }
  return rows;
}

std::string format_table_aligned(const std::vector<ComparisonRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %5s  %4s\n", static_cast<int>(width), "method",
                "ACC", "K_hat", "runs");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.5f  %5d  %4d\n", static_cast<int>(width),
                  r.method.c_str(), r.mean_accuracy, r.modal_k, r.runs);
    out << buf;
  }
  return out.str();
}

std::string format_table_delimited(const std::vector<ComparisonRow>& rows, char delimiter) {
  std::ostringstream out;
  out << "method" << delimiter << "acc" << delimiter << "k_hat" << delimiter << "runs\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.mean_accuracy);
    out << r.method << delimiter << buf << delimiter << r.modal_k << delimiter << r.runs << '\n';
  }
  return out.str();
}

}  // namespace dms
