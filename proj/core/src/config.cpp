#include "dms/config.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dms/error.hpp"

namespace dms {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0') {
    throw ValidationError("config: " + key + " expects a number, got '" + value + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || *end != '\0') {
    throw ValidationError("config: " + key + " expects an integer, got '" + value + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  return static_cast<int>(to_integer(key, value));
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ValidationError("config: " + key + " expects a boolean, got '" + value + "'");
}

std::vector<int> to_dims(const std::string& key, const std::string& value) {
  std::vector<int> dims;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) dims.push_back(to_int(key, trim(item)));
  if (dims.empty()) throw ValidationError("config: " + key + " is empty");
  return dims;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "loss",         "alpha",           "lambda3",     "learning_rate", "mse_epochs",
      "reg_epochs",   "phases",          "batch_size",  "truncation",    "clusters",
      "omega0",       "a0",              "b0",          "m0",            "lambda0",
      "m0_from_data", "prune_threshold", "prune_every", "mixture_iters", "dims",
      "sigma_head",   "init",            "seed"};
  return keys;
}

ConfigValues parse_config_text(const std::string& text) {
  ConfigValues values;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(ParseError::Kind::kBadValue,
                       "config line " + std::to_string(number) + ": expected key=value");
    }
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

ConfigValues load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config_text(
      std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

bool apply_config(RunConfig& c, const ConfigValues& values) {
  bool seeded = false;
  for (const auto& [key, value] : values) {
    if (key == "loss") c.loss = parse_loss_kind(value);
    else if (key == "alpha") c.alpha = to_double(key, value);
    else if (key == "lambda3") c.lambda3 = to_double(key, value);
    else if (key == "learning_rate") c.learning_rate = to_double(key, value);
    else if (key == "mse_epochs") c.mse_epochs = to_int(key, value);
    else if (key == "reg_epochs") c.reg_epochs = to_int(key, value);
    else if (key == "phases") c.phases = to_int(key, value);
    else if (key == "batch_size") c.batch_size = to_int(key, value);
    else if (key == "truncation") c.truncation = to_int(key, value);
    else if (key == "clusters") c.clusters = to_int(key, value);
    else if (key == "omega0") c.hyper.omega0 = to_double(key, value);
    else if (key == "a0") c.hyper.a0 = to_double(key, value);
    else if (key == "b0") c.hyper.b0 = to_double(key, value);
    else if (key == "m0") c.hyper.m0 = to_double(key, value);
    else if (key == "lambda0") c.hyper.lambda0 = to_double(key, value);
    else if (key == "m0_from_data") c.m0_from_data = to_bool(key, value);
    else if (key == "prune_threshold") c.prune_threshold = to_double(key, value);
    else if (key == "prune_every") c.prune_every = to_int(key, value);
    else if (key == "mixture_iters") c.mixture_iters = to_int(key, value);
    else if (key == "dims") c.dims = to_dims(key, value);
    else if (key == "sigma_head") c.sigma_head = to_bool(key, value);
    else if (key == "init") {
      if (value == "uniform") c.init = NetInit::kUniform;
      else if (value == "orthogonal") c.init = NetInit::kOrthogonal;
      else throw ValidationError("config: init expects uniform or orthogonal, got '" + value + "'");
    }
    else if (key == "seed") {
      const long long s = to_integer(key, value);
      if (s < 0) throw ValidationError("config: seed must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
      seeded = true;
    } else {
      throw ValidationError("config: unknown key '" + key + "'");
    }
  }
  return seeded;
}

std::string format_config(const RunConfig& c) {
  std::string dims;
  for (std::size_t i = 0; i < c.dims.size(); ++i) {
    if (i) dims += ',';
    dims += std::to_string(c.dims[i]);
  }
  std::ostringstream out;
  out << "loss=" << to_string(c.loss) << '\n'
      << "alpha=" << fmt(c.alpha) << '\n'
      << "lambda3=" << fmt(c.lambda3) << '\n'
      << "learning_rate=" << fmt(c.learning_rate) << '\n'
      << "mse_epochs=" << c.mse_epochs << '\n'
      << "reg_epochs=" << c.reg_epochs << '\n'
      << "phases=" << c.phases << '\n'
      << "batch_size=" << c.batch_size << '\n'
      << "truncation=" << c.truncation << '\n'
      << "clusters=" << c.clusters << '\n'
      << "omega0=" << fmt(c.hyper.omega0) << '\n'
      << "a0=" << fmt(c.hyper.a0) << '\n'
      << "b0=" << fmt(c.hyper.b0) << '\n'
      << "m0=" << fmt(c.hyper.m0) << '\n'
      << "lambda0=" << fmt(c.hyper.lambda0) << '\n'
      << "m0_from_data=" << (c.m0_from_data ? 1 : 0) << '\n'
      << "prune_threshold=" << fmt(c.prune_threshold) << '\n'
      << "prune_every=" << c.prune_every << '\n'
      << "mixture_iters=" << c.mixture_iters << '\n'
      << "dims=" << dims << '\n'
      << "sigma_head=" << (c.sigma_head ? 1 : 0) << '\n'
      << "init=" << (c.init == NetInit::kUniform ? "uniform" : "orthogonal") << '\n'
      << "seed=" << c.seed << '\n';
  return out.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return format_config(a) == format_config(b);
}

}  // namespace dms
