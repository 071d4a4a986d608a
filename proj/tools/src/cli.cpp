#include "dms_cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dms/config.hpp"
#include "dms/divergence.hpp"
#include "dms/error.hpp"
#include "dms/eval.hpp"
#include "dms/features.hpp"
#include "dms/state_io.hpp"
#include "dms_cli/pipelines.hpp"

namespace dms::cli {

namespace {

// RunConfig fields exposed as --flags, plus the config file and seed.
struct RunFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  CLI::Option* seed_option = nullptr;
  std::map<std::string, std::string> storage;
  std::map<std::string, CLI::Option*> options;
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

void add_run_flags(CLI::App* app, RunFlags& flags,
                   const std::map<std::string, std::string>& aliases = {}) {
  app->add_option("--config", flags.config_path, "key=value run configuration file")
      ->check(CLI::ExistingFile);
  flags.seed_option = app->add_option("--seed", flags.seed, "Random seed");
  for (const auto& key : config_keys()) {
    if (key == "seed") continue;
    std::string names = "--" + dashed(key);
    if (auto it = aliases.find(key); it != aliases.end()) names += "," + it->second;
    flags.options[key] = app->add_option(names, flags.storage[key], "Overrides " + key);
  }
}

struct Resolved {
  RunConfig config;
  bool seeded = false;
  std::set<std::string> explicit_keys;
};

Resolved resolve(const RunFlags& flags) {
  Resolved r;
  if (!flags.config_path.empty()) {
    const auto file = load_config_file(flags.config_path);
    r.seeded = apply_config(r.config, file);
    for (const auto& [k, v] : file) r.explicit_keys.insert(k);
  }
  ConfigValues overrides;
  for (const auto& [key, option] : flags.options) {
    if (option->count() > 0) {
      overrides[key] = flags.storage.at(key);
      r.explicit_keys.insert(key);
    }
  }
  apply_config(r.config, overrides);
  if (flags.seed_option && flags.seed_option->count() > 0) {
    r.config.seed = flags.seed;
    r.seeded = true;
  }
  return r;
}

void require_seed(const Resolved& r, const std::string& command) {
  if (!r.seeded) throw ValidationError(command + ": --seed is required (or seed= in --config)");
}

// The network input width follows the data unless dims was given.
void fit_dims(Resolved& r, Eigen::Index cols) {
  if (!r.explicit_keys.count("dims")) r.config.dims.front() = static_cast<int>(cols);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string format_assignments(const std::vector<int>& a) {
  std::string s;
  for (int v : a) s += std::to_string(v) + '\n';
  return s;
}

std::vector<int> parse_assignments(const std::string& text, const std::string& path) {
  std::vector<int> a;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw ParseError(ParseError::Kind::kBadValue,
                         path + " line " + std::to_string(number) + ": bad label '" + token + "'");
      }
      a.push_back(v);
    }
  }
  if (a.empty()) throw ParseError(ParseError::Kind::kEmpty, path + ": no labels");
  return a;
}

KReport report_from_assignments(const std::vector<int>& assignments) {
  std::map<int, int> counts;
  for (int a : assignments) ++counts[a];
  KReport r{static_cast<int>(counts.size()), {}};
  for (const auto& [k, c] : counts) r.sizes.push_back(c);
  return r;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> v;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ValidationError(what + ": bad number '" + item + "'");
    v.push_back(x);
  }
  if (v.empty()) throw ValidationError(what + ": empty list");
  return v;
}

std::vector<double> parse_grid(const std::string& text) {
  const auto parts = [&] {
    std::vector<std::string> p;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ':')) p.push_back(item);
    return p;
  }();
  if (parts.size() != 3) throw ValidationError("--grid expects start:stop:step, got '" + text + "'");
  return linear_grid(parse_list(parts[0], "--grid")[0], parse_list(parts[1], "--grid")[0],
                     parse_list(parts[2], "--grid")[0]);
}

struct Common {
  RunFlags flags;
  std::string features;
  std::string report;
  std::string assignments_out;
  std::string state_out;
};

// ---- subcommands ------------------------------------------------------------

struct SynthArgs {
  SynthSpec spec;
  std::uint64_t seed = 0;
  CLI::Option* seed_option = nullptr;
  std::string out;
  std::string format = "text";
};

int do_synth(const SynthArgs& a, std::ostream& out) {
  if (a.seed_option->count() == 0) throw ValidationError("synth: --seed is required");
  SynthSpec spec = a.spec;
  spec.seed = a.seed;
  const auto fm = synth_mixture(spec);
  save_features(a.out, fm, a.format == "binary" ? FeatureFormat::kBinary : FeatureFormat::kText);
  out << "wrote " << fm.rows << " x " << fm.cols << " to " << a.out << '\n';
  return kExitOk;
}

struct FitArgs : Common {
  bool dpm = true;
};

int do_fit(FitArgs& a, std::ostream& out) {
  auto r = resolve(a.flags);
  require_seed(r, a.dpm ? "fit-dpm" : "fit-gmm");
  r.config.validate();
  const auto fm = load_features(a.features);
  const Eigen::MatrixXd z = fm.to_eigen();
  std::ostringstream report;
  std::vector<int> assignments;
  std::string state_text;
  KReport k;
  int iterations = 0;
  bool converged = false;
  if (a.dpm) {
    const auto s = fit_dpm(z, r.config.truncation, r.config.hyper, r.config.mixture_iters,
                           r.config.seed, r.config.dpm_options());
    k = estimated_k_report(s);
    assignments = s.assignments;
    iterations = s.iterations;
    converged = s.converged;
    if (!a.state_out.empty()) state_text = serialize_dpm(s);
  } else {
    if (z.rows() < r.config.clusters) throw ValidationError("fit-gmm: fewer samples than clusters");
    const auto s = fit_gmm(z, r.config.clusters, r.config.mixture_iters, r.config.seed);
    k = estimated_k_report(s);
    assignments = s.assignments;
    iterations = s.iterations;
    converged = s.converged;
    if (!a.state_out.empty()) state_text = serialize_gmm(s);
  }
  std::optional<double> acc;
  if (fm.labels) acc = clustering_accuracy({assignments, *fm.labels});
  write_fit_report(report, a.dpm ? "dpm" : "gmm", k, acc ? &*acc : nullptr, iterations, converged);
  emit(a.report, report.str(), out);
  if (!a.state_out.empty()) write_text_file(a.state_out, state_text);
  if (!a.assignments_out.empty()) write_text_file(a.assignments_out, format_assignments(assignments));
  return kExitOk;
}

struct TrainArgs : Common {
  std::string metrics_out;
  std::string net_out;
  bool timings = false;
};

int do_train(TrainArgs& a, std::ostream& out) {
  auto r = resolve(a.flags);
  require_seed(r, "train");
  const auto fm = load_features(a.features);
  const Eigen::MatrixXd data = fm.to_eigen();
  fit_dims(r, data.cols());
  r.config.validate();
  const auto result = train(data, r.config);

  KReport k;
  int iterations = 0;
  bool converged = false;
  std::string state_text;
  if (result.dpm) {
    k = estimated_k_report(*result.dpm);
    iterations = result.dpm->iterations;
    converged = result.dpm->converged;
    state_text = serialize_dpm(*result.dpm);
  } else if (result.gmm) {
    k = estimated_k_report(*result.gmm);
    iterations = result.gmm->iterations;
    converged = result.gmm->converged;
    state_text = serialize_gmm(*result.gmm);
  } else {
    k = report_from_assignments(result.assignments);
    iterations = result.kmeans->iterations;
    converged = result.kmeans->converged;
  }
  std::optional<double> acc;
  if (fm.labels) acc = clustering_accuracy({result.assignments, *fm.labels});
  std::ostringstream report;
  write_fit_report(report, to_string(r.config.loss), k, acc ? &*acc : nullptr, iterations,
                   converged);
  report << "k_trajectory";
  for (int v : result.k_trajectory) report << ' ' << v;
  report << '\n';
  emit(a.report, report.str(), out);

  if (!a.metrics_out.empty()) {
    std::ostringstream m;
    write_train_report(m, result, a.timings);
    write_text_file(a.metrics_out, m.str());
  }
  if (!a.net_out.empty()) write_text_file(a.net_out, serialize_net(result.net));
  if (!a.state_out.empty() && !state_text.empty()) write_text_file(a.state_out, state_text);
  if (!a.assignments_out.empty()) {
    write_text_file(a.assignments_out, format_assignments(result.assignments));
  }
  return kExitOk;
}

struct EvalArgs : Common {
  std::string predicted;
  std::string truth;
  std::string methods;
  int repeats = 10;
  int threads = 0;
  std::string format = "aligned";
  std::string runs_out;
};

int do_eval(EvalArgs& a, std::ostream& out) {
  std::optional<FeatureMatrix> fm;
  if (!a.features.empty()) fm = load_features(a.features);
  std::vector<int> truth;
  if (!a.truth.empty()) {
    truth = parse_assignments(read_text_file(a.truth), a.truth);
  } else if (fm && fm->labels) {
    truth = *fm->labels;
  } else {
    throw ValidationError("eval: ground truth needs --truth or a labelled feature file");
  }

  if (!a.predicted.empty()) {
    if (!a.methods.empty()) throw ValidationError("eval: --assignments and --methods are exclusive");
    const auto predicted = parse_assignments(read_text_file(a.predicted), a.predicted);
    std::ostringstream report;
    report << "acc " << format_real(clustering_accuracy({predicted, truth})) << '\n'
           << "k_hat " << report_from_assignments(predicted).k_hat << '\n';
    emit(a.report, report.str(), out);
    return kExitOk;
  }
  if (a.methods.empty()) throw ValidationError("eval: give --assignments or --methods");
  if (!fm) throw ValidationError("eval: --methods needs a feature file");

  auto r = resolve(a.flags);
  require_seed(r, "eval");
  fit_dims(r, static_cast<Eigen::Index>(fm->cols));
  r.config.validate();
  std::vector<Method> methods;
  {
    std::stringstream in(a.methods);
    std::string item;
    while (std::getline(in, item, ',')) methods.push_back(parse_method(item));
  }
  int threads = a.threads;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto runs =
      compare_methods(methods, fm->to_eigen(), truth, r.config, a.repeats, r.config.seed, threads);
  const auto rows = summarize(runs);
  const std::string table =
      a.format == "delimited" ? format_table_delimited(rows) : format_table_aligned(rows);
  emit(a.report, table, out);
  if (!a.runs_out.empty()) {
    std::ostringstream per_run;
    per_run << "# trial method acc k_hat\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      per_run << i / methods.size() << ' ' << runs[i].method << ' ' << format_real(runs[i].accuracy)
              << ' ' << runs[i].k_hat << '\n';
    }
    write_text_file(a.runs_out, per_run.str());
  }
  return kExitOk;
}

struct AsymmetryArgs {
  std::string config_path;
  double mu1 = 1.0;
  double alpha = kDefaultAlpha;
  CLI::Option* alpha_option = nullptr;
  std::string grid = "-2:2:0.1";
  std::string report;
};

double alpha_from(const std::string& config_path, CLI::Option* flag, double flag_value) {
  if (flag->count() > 0) return flag_value;
  if (config_path.empty()) return flag_value;
  RunConfig c;
  apply_config(c, load_config_file(config_path));
  return c.alpha;
}

int do_asymmetry(const AsymmetryArgs& a, std::ostream& out) {
  const double alpha = alpha_from(a.config_path, a.alpha_option, a.alpha);
  const auto grid = parse_grid(a.grid);
  std::ostringstream table;
  table << "# mu2 kld ajsd\n";
  for (const auto& row : asymmetry_table(a.mu1, grid, alpha)) {
    table << format_real(row.mu2) << ' ' << format_real(row.kld) << ' ' << format_real(row.ajsd)
          << '\n';
  }
  emit(a.report, table.str(), out);
  return kExitOk;
}

struct DivergenceArgs {
  std::string config_path;
  std::string kind = "ajsd";
  std::string mu1, var1, mu2, var2;
  double alpha = kDefaultAlpha;
  CLI::Option* alpha_option = nullptr;
};

int do_divergence(const DivergenceArgs& a, std::ostream& out) {
  const double alpha = alpha_from(a.config_path, a.alpha_option, a.alpha);
  const auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  const auto m1 = parse_list(a.mu1, "--mu1");
  const auto m2 = parse_list(a.mu2, "--mu2");
  const auto v1 = a.var1.empty() ? std::vector<double>(m1.size(), 1.0) : parse_list(a.var1, "--var1");
  const auto v2 = a.var2.empty() ? std::vector<double>(m2.size(), 1.0) : parse_list(a.var2, "--var2");
  double value = 0.0;
  if (a.kind == "first-order") {
    if (m1.size() != m2.size()) throw ValidationError("divergence: --mu1 and --mu2 differ in length");
    value = alpha_jsd_first_order(m1, m2, alpha);
  } else {
    const DiagGaussian g1(to_vec(m1), to_vec(v1));
    const DiagGaussian g2(to_vec(m2), to_vec(v2));
    if (a.kind == "kld") {
      value = kld_gaussian(g1, g2);
    } else if (a.kind == "ajsd") {
      value = alpha_jsd(g1, g2, alpha);
    } else {
      throw ValidationError("divergence: --kind must be kld, ajsd or first-order");
    }
  }
  out << format_real(value) << '\n';
  return kExitOk;
}

void add_outputs(CLI::App* app, Common& c) {
  app->add_option("--report", c.report, "Write the report here instead of standard output");
  app->add_option("--assignments-out", c.assignments_out, "Write one cluster index per sample");
  app->add_option("--state-out", c.state_out, "Write the fitted mixture state");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep model selection: DPM / GMM clustering with skew-divergence regularizers",
               "dms"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate isotropic Gaussian blobs");
  s->add_option("--k", synth.spec.k, "Number of blobs")->capture_default_str();
  s->add_option("--d", synth.spec.dim, "Dimension")->capture_default_str();
  s->add_option("--n-per", synth.spec.per_cluster, "Points per blob")->capture_default_str();
  s->add_option("--sep", synth.spec.separation, "Minimum center distance in std units")
      ->capture_default_str();
  s->add_option("--stddev", synth.spec.stddev, "Component standard deviation")
      ->capture_default_str();
  synth.seed_option = s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--out", synth.out, "Output feature file")->required();
  s->add_option("--format", synth.format, "text or binary")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();

  FitArgs fit_dpm_args;
  auto* fd = app.add_subcommand("fit-dpm", "Fit a truncated DPM on a feature file");
  add_run_flags(fd, fit_dpm_args.flags, {{"truncation", "--t"}, {"mixture_iters", "--max-iters"}});
  add_outputs(fd, fit_dpm_args);
  fd->add_option("features", fit_dpm_args.features, "Feature file")
      ->required()
      ->check(CLI::ExistingFile);

  FitArgs fit_gmm_args;
  fit_gmm_args.dpm = false;
  auto* fg = app.add_subcommand("fit-gmm", "Fit a hard-EM GMM on a feature file");
  add_run_flags(fg, fit_gmm_args.flags, {{"clusters", "--k"}, {"mixture_iters", "--max-iters"}});
  add_outputs(fg, fit_gmm_args);
  fg->add_option("features", fit_gmm_args.features, "Feature file")
      ->required()
      ->check(CLI::ExistingFile);

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train the autoencoder with a clustering regularizer");
  add_run_flags(tr, train_args.flags, {{"truncation", "--t"}, {"learning_rate", "--lr"}});
  add_outputs(tr, train_args);
  tr->add_option("--metrics-out", train_args.metrics_out, "Per-epoch metrics file");
  tr->add_option("--net-out", train_args.net_out, "Trained network weights");
  tr->add_flag("--timings", train_args.timings, "Include wall-clock phase timings in metrics");
  tr->add_option("features", train_args.features, "Feature file")
      ->required()
      ->check(CLI::ExistingFile);

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Score assignments, or compare methods over repeats");
  add_run_flags(ev, eval_args.flags, {{"truncation", "--t"}, {"learning_rate", "--lr"}});
  ev->add_option("--report", eval_args.report, "Write the report here instead of standard output");
  ev->add_option("--assignments", eval_args.predicted, "Predicted cluster indices, one per line")
      ->check(CLI::ExistingFile);
  ev->add_option("--truth", eval_args.truth, "True labels, one per line")
      ->check(CLI::ExistingFile);
  ev->add_option("--methods", eval_args.methods, "Comma list of ajsd, kld, abc, dpm, gmm");
  ev->add_option("--repeats", eval_args.repeats, "Runs per method")->capture_default_str();
  ev->add_option("--threads", eval_args.threads, "Concurrent runs (0: hardware threads)");
  ev->add_option("--table-format", eval_args.format, "aligned or delimited")
      ->check(CLI::IsMember({"aligned", "delimited"}))
      ->capture_default_str();
  ev->add_option("--runs-out", eval_args.runs_out, "Per-run results file");
  ev->add_option("features", eval_args.features, "Feature file")->check(CLI::ExistingFile);

  AsymmetryArgs asym;
  auto* da = app.add_subcommand("demo-asymmetry", "KLD vs skew divergence over a mean grid");
  da->add_option("--config", asym.config_path, "Run configuration (alpha)")
      ->check(CLI::ExistingFile);
  da->add_option("--mu1", asym.mu1, "Fixed mean")->capture_default_str();
  asym.alpha_option = da->add_option("--alpha", asym.alpha, "Skew weight")->capture_default_str();
  da->add_option("--grid", asym.grid, "start:stop:step for the second mean")
      ->capture_default_str();
  da->add_option("--report", asym.report, "Write the table here instead of standard output");

  DivergenceArgs div;
  auto* dv = app.add_subcommand("divergence", "Divergence between two diagonal Gaussians");
  dv->add_option("--config", div.config_path, "Run configuration (alpha)")
      ->check(CLI::ExistingFile);
  dv->add_option("--kind", div.kind, "kld, ajsd or first-order")->capture_default_str();
  dv->add_option("--mu1", div.mu1, "Comma separated mean")->required();
  dv->add_option("--var1", div.var1, "Comma separated variances (default ones)");
  dv->add_option("--mu2", div.mu2, "Comma separated mean")->required();
  dv->add_option("--var2", div.var2, "Comma separated variances (default ones)");
  div.alpha_option = dv->add_option("--alpha", div.alpha, "Skew weight")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (s->parsed()) return do_synth(synth, out);
    if (fd->parsed()) return do_fit(fit_dpm_args, out);
    if (fg->parsed()) return do_fit(fit_gmm_args, out);
    if (tr->parsed()) return do_train(train_args, out);
    if (ev->parsed()) return do_eval(eval_args, out);
    if (da->parsed()) return do_asymmetry(asym, out);
    if (dv->parsed()) return do_divergence(div, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace dms::cli
