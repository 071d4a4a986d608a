#include "dms/state_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "dms/error.hpp"

namespace dms {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) out << (j ? " " : "") << format_real(row[j]);
  out << '\n';
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) write_row(out, m.row(i));
}

template <class Range>
void write_ints(std::ostream& out, const Range& r) {
  bool first = true;
  for (auto v : r) {
    out << (first ? "" : " ") << static_cast<int>(v);
    first = false;
  }
  out << '\n';
}

class Tokens {
 public:
  Tokens(const std::string& text, const char* kind) : in_(text), kind_(kind) {}

  void expect(const std::string& word) {
    const std::string got = word_();
    if (got != word) {
      throw ParseError(ParseError::Kind::kMalformedHeader,
                       std::string(kind_) + ": expected '" + word + "', got '" + got + "'");
    }
  }
  double real() {
    const std::string t = word_();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (*end != '\0') bad(t);
    return v;
  }
  long long integer() {
    const std::string t = word_();
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (*end != '\0') bad(t);
    return v;
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = real();
    }
    return m;
  }
  Eigen::VectorXd vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = real();
    return v;
  }
  std::string word() { return word_(); }

 private:
  std::string word_() {
    std::string t;
    if (!(in_ >> t)) throw ParseError(ParseError::Kind::kTruncated, std::string(kind_) + ": truncated");
    return t;
  }
  [[noreturn]] void bad(const std::string& t) {
    throw ParseError(ParseError::Kind::kBadValue, std::string(kind_) + ": bad value '" + t + "'");
  }

  std::istringstream in_;
  const char* kind_;
};

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "leaky_relu") return Activation::kLeakyRelu;
  throw ParseError(ParseError::Kind::kBadValue, "net: unknown activation '" + s + "'");
}

const char* activation_name(Activation a) {
  return a == Activation::kIdentity ? "identity" : "leaky_relu";
}

}  // namespace

std::string serialize_dpm(const DpmState& s) {
  std::ostringstream out;
  out << "dms-dpm 1\n"
      << s.truncation() << ' ' << s.dim() << ' ' << s.assignments.size() << '\n'
      << format_real(s.hyper.omega0) << ' ' << format_real(s.hyper.a0) << ' '
      << format_real(s.hyper.b0) << ' ' << format_real(s.hyper.m0) << ' '
      << format_real(s.hyper.lambda0) << '\n'
      << s.iterations << ' ' << (s.converged ? 1 : 0) << ' ' << s.stick_clamp_events << ' '
      << s.precision_floor_events << '\n';
  write_row(out, s.prior_mean.transpose());
  write_matrix(out, s.means);
  write_matrix(out, s.precisions);
  write_row(out, s.sticks.transpose());
  write_ints(out, s.active);
  write_ints(out, s.assignments);
  return out.str();
}

DpmState parse_dpm(const std::string& text) {
  Tokens in(text, "dpm state");
  in.expect("dms-dpm");
  in.expect("1");
  const auto t = in.integer();
  const auto d = in.integer();
  const auto n = in.integer();
  if (t < 1 || d < 1 || n < 0) throw ParseError(ParseError::Kind::kMalformedHeader, "dpm state: bad dimensions");
  DpmState s;
  s.hyper.omega0 = in.real();
  s.hyper.a0 = in.real();
  s.hyper.b0 = in.real();
  s.hyper.m0 = in.real();
  s.hyper.lambda0 = in.real();
  s.iterations = static_cast<int>(in.integer());
  s.converged = in.integer() != 0;
  s.stick_clamp_events = in.integer();
  s.precision_floor_events = in.integer();
  s.prior_mean = in.vector(d);
  s.means = in.matrix(t, d);
  s.precisions = in.matrix(t, d);
  s.sticks = in.vector(t);
  for (long long k = 0; k < t; ++k) s.active.push_back(in.integer() != 0);
  for (long long i = 0; i < n; ++i) s.assignments.push_back(static_cast<int>(in.integer()));
  s.validate(n);
  return s;
}

std::string serialize_gmm(const GmmState& s) {
  std::ostringstream out;
  out << "dms-gmm 1\n"
      << s.num_clusters() << ' ' << s.dim() << ' ' << s.assignments.size() << '\n'
      << s.iterations << ' ' << (s.converged ? 1 : 0) << '\n';
  write_matrix(out, s.means);
  write_matrix(out, s.precisions);
  write_row(out, s.weights.transpose());
  write_ints(out, s.active);
  write_ints(out, s.assignments);
  return out.str();
}

GmmState parse_gmm(const std::string& text) {
  Tokens in(text, "gmm state");
  in.expect("dms-gmm");
  in.expect("1");
  const auto k = in.integer();
  const auto d = in.integer();
  const auto n = in.integer();
  if (k < 1 || d < 1 || n < 0) throw ParseError(ParseError::Kind::kMalformedHeader, "gmm state: bad dimensions");
  GmmState s;
  s.iterations = static_cast<int>(in.integer());
  s.converged = in.integer() != 0;
  s.means = in.matrix(k, d);
  s.precisions = in.matrix(k, d);
  s.weights = in.vector(k);
  for (long long c = 0; c < k; ++c) s.active.push_back(in.integer() != 0);
  for (long long i = 0; i < n; ++i) s.assignments.push_back(static_cast<int>(in.integer()));
  s.validate(n);
  return s;
}

std::string serialize_net(const LatentNet& net) {
  std::ostringstream out;
  const std::size_t layers =
      net.encoder.size() + 1 + (net.logvar_head ? 1 : 0) + net.decoder.size();
  out << "dms-net 1\n" << layers << '\n';
  auto layer = [&out](const char* role, const Dense& l) {
    out << role << ' ' << l.in_dim() << ' ' << l.out_dim() << ' ' << activation_name(l.activation)
        << '\n';
    write_matrix(out, l.weight);
    write_row(out, l.bias.transpose());
  };
  for (const auto& l : net.encoder) layer("enc", l);
  layer("mean", net.mean_head);
  if (net.logvar_head) layer("logvar", *net.logvar_head);
  for (const auto& l : net.decoder) layer("dec", l);
  return out.str();
}

LatentNet parse_net(const std::string& text) {
  Tokens in(text, "net");
  in.expect("dms-net");
  in.expect("1");
  const auto count = in.integer();
  if (count < 2) throw ParseError(ParseError::Kind::kMalformedHeader, "net: too few layers");
  LatentNet net;
  bool have_mean = false;
  for (long long i = 0; i < count; ++i) {
    const std::string role = in.word();
    const auto in_dim = in.integer();
    const auto out_dim = in.integer();
    if (in_dim < 1 || out_dim < 1) throw ParseError(ParseError::Kind::kMalformedHeader, "net: bad layer dims");
    Dense l;
    l.activation = parse_activation(in.word());
    l.weight = in.matrix(out_dim, in_dim);
    l.bias = in.vector(out_dim);
    if (role == "enc") net.encoder.push_back(std::move(l));
    else if (role == "mean") { net.mean_head = std::move(l); have_mean = true; }
    else if (role == "logvar") net.logvar_head = std::move(l);
    else if (role == "dec") net.decoder.push_back(std::move(l));
    else throw ParseError(ParseError::Kind::kBadValue, "net: unknown layer role '" + role + "'");
  }
  if (!have_mean) throw ParseError(ParseError::Kind::kMalformedHeader, "net: missing mean head");
  net.validate();
  return net;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << contents;
  if (!out) throw Error("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_train_report(std::ostream& out, const TrainReport& report, bool include_timings) {
  out << "# phase epoch metric value\n";
  for (const auto& m : report.metrics) {
    out << m.phase << ' ' << m.epoch << ' ' << m.name << ' ' << format_real(m.value) << '\n';
  }
  if (include_timings) {
    for (const auto& t : report.timings) {
      out << t.phase << " 0 seconds " << format_real(t.seconds) << '\n';
    }
  }
}

void write_fit_report(std::ostream& out, const std::string& method, const KReport& k,
                      const double* accuracy, int iterations, bool converged) {
  out << "method " << method << '\n'
      << "iterations " << iterations << '\n'
      << "converged " << (converged ? 1 : 0) << '\n'
      << "k_hat " << k.k_hat << '\n'
      << "sizes";
  for (int s : k.sizes) out << ' ' << s;
  out << '\n';
  if (accuracy) out << "acc " << format_real(*accuracy) << '\n';
}

}  // namespace dms
