#pragma once
// End-to-end runs shared by the command line and the acceptance checks.
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dms/eval.hpp"
#include "dms/trainer.hpp"

namespace dms::cli {

/// ajsd / kld / abc train the autoencoder with that regularizer; dpm and gmm
/// fit the mixture directly on the input features.
enum class Method { kAjsd, kKld, kAbc, kDpm, kGmm };

Method parse_method(const std::string& name);
std::string to_string(Method m);

struct MethodRun {
  RunSummary summary;
  std::vector<int> assignments;
};

/// `config.seed` is replaced by `seed`. dims[0] must match the data.
MethodRun run_method(Method method, const Eigen::MatrixXd& data, const std::vector<int>& labels,
                     RunConfig config, std::uint64_t seed);

/// Seed used for trial `trial` of `method` in a comparison sweep.
std::uint64_t trial_seed(std::uint64_t seed, int trial, Method method);

/// Every method `repeats` times with derived seeds, up to `threads` at once.
/// Results are ordered by trial, then by the order of `methods`.
std::vector<RunSummary> compare_methods(const std::vector<Method>& methods,
                                        const Eigen::MatrixXd& data,
                                        const std::vector<int>& labels, const RunConfig& config,
                                        int repeats, std::uint64_t seed, int threads);

}  // namespace dms::cli
