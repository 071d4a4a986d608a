#include "dms_cli/pipelines.hpp"

#include <algorithm>
#include <cctype>
#include <future>

#include "dms/dpm.hpp"
#include "dms/error.hpp"
#include "dms/gmm.hpp"
#include "dms/rng.hpp"

namespace dms::cli {

Method parse_method(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ajsd" || s == "ajsd-dpm") return Method::kAjsd;
  if (s == "kld" || s == "kld-gmm") return Method::kKld;
  if (s == "abc") return Method::kAbc;
  if (s == "dpm") return Method::kDpm;
  if (s == "gmm") return Method::kGmm;
  throw ValidationError("unknown method '" + name + "' (ajsd, kld, abc, dpm, gmm)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kAjsd: return "ajsd";
    case Method::kKld: return "kld";
    case Method::kAbc: return "abc";
    case Method::kDpm: return "dpm";
    case Method::kGmm: return "gmm";
  }
  return "?";
}

MethodRun run_method(Method method, const Eigen::MatrixXd& data, const std::vector<int>& labels,
                     RunConfig config, std::uint64_t seed) {
  config.seed = seed;
  config.validate();
  MethodRun run;
  run.summary.method = to_string(method);
  switch (method) {
    case Method::kAjsd:
    case Method::kKld:
    case Method::kAbc: {
      config.loss = method == Method::kAjsd  ? LossKind::kAjsdDpm
                    : method == Method::kKld ? LossKind::kKldGmm
                                             : LossKind::kAbc;
      const auto report = train(data, config);
      run.assignments = report.assignments;
      run.summary.k_hat = report.final_k();
      break;
    }
    case Method::kDpm: {
      const auto state = fit_dpm(data, config.truncation, config.hyper, config.mixture_iters,
                                 seed, config.dpm_options());
      run.assignments = state.assignments;
      run.summary.k_hat = estimate_k(state);
      break;
    }
    case Method::kGmm: {
      if (data.rows() < config.clusters) throw ValidationError("gmm: fewer samples than clusters");
      const auto state = fit_gmm(data, config.clusters, config.mixture_iters, seed);
      run.assignments = state.assignments;
      run.summary.k_hat = estimated_k_report(state).k_hat;
      break;
    }
  }
  run.summary.accuracy = clustering_accuracy({run.assignments, labels});
  return run;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial, Method method) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(trial)), to_string(method));
}

std::vector<RunSummary> compare_methods(const std::vector<Method>& methods,
                                        const Eigen::MatrixXd& data,
                                        const std::vector<int>& labels, const RunConfig& config,
                                        int repeats, std::uint64_t seed, int threads) {
  if (methods.empty()) throw ValidationError("compare: no methods");
  if (repeats < 1) throw ValidationError("compare: repeats must be >= 1");
  if (threads < 1) throw ValidationError("compare: threads must be >= 1");
  struct Job {
    Method method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int t = 0; t < repeats; ++t)
    for (Method m : methods) jobs.push_back({m, trial_seed(seed, t, m)});

  std::vector<RunSummary> results(jobs.size());
  for (std::size_t start = 0; start < jobs.size(); start += static_cast<std::size_t>(threads)) {
    const std::size_t stop = std::min(jobs.size(), start + static_cast<std::size_t>(threads));
    std::vector<std::future<RunSummary>> running;
    for (std::size_t j = start; j < stop; ++j) {
      running.push_back(std::async(std::launch::async, [&, j] {
        return run_method(jobs[j].method, data, labels, config, jobs[j].seed).summary;
      }));
    }
    for (std::size_t j = start; j < stop; ++j) results[j] = running[j - start].get();
  }
  return results;
}

}  // namespace dms::cli
