#include "dms/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dms/error.hpp"
#include "dms/rng.hpp"

namespace dms {

namespace {

constexpr char kMagic[8] = {'D', 'M', 'S', 'F', 'E', 'A', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "binary feature IO assumes a little-endian host");

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw ParseError(ParseError::Kind::kTruncated,
                       std::string("binary features: truncated while reading ") + what);
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

FeatureMatrix parse_binary(const std::string& bytes) {
  Reader in(bytes);
  for (char c : kMagic) {
    if (in.get<char>("magic") != c) {
      throw ParseError(ParseError::Kind::kMalformedHeader, "binary features: bad magic");
    }
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kVersion) {
    throw ParseError(ParseError::Kind::kMalformedHeader,
                     "binary features: unsupported version " + std::to_string(version));
  }
  FeatureMatrix fm;
  fm.rows = in.get<std::uint64_t>("N");
  fm.cols = in.get<std::uint64_t>("D");
  const auto has_labels = in.get<std::uint8_t>("has_labels");
  if (has_labels > 1 || fm.cols == 0) {
    throw ParseError(ParseError::Kind::kMalformedHeader, "binary features: bad header fields");
  }
  const std::size_t payload = fm.rows * fm.cols * sizeof(float) +
                              (has_labels ? fm.rows * sizeof(std::int32_t) : 0);
  if (bytes.size() < 8 + 4 + 8 + 8 + 1 + payload) {
    throw ParseError(ParseError::Kind::kTruncated, "binary features: file shorter than header claims");
  }
  fm.values.resize(fm.rows * fm.cols);
  for (std::size_t r = 0; r < fm.rows; ++r) {
    for (std::size_t c = 0; c < fm.cols; ++c) {
      const float v = in.get<float>("values");
      if (!std::isfinite(v)) {
        throw ParseError(ParseError::Kind::kNonFinite, "binary features: non-finite value at row " +
                                                           std::to_string(r) + ", col " +
                                                           std::to_string(c));
      }
      fm.values[r * fm.cols + c] = v;
    }
  }
  if (has_labels) {
    std::vector<int> labels(fm.rows);
    for (auto& l : labels) l = in.get<std::int32_t>("labels");
    fm.labels = std::move(labels);
  }
  return fm;
}

bool next_content_line(std::istringstream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

FeatureMatrix parse_text(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string line;
  if (!next_content_line(in, line)) {
    throw ParseError(ParseError::Kind::kEmpty, "text features: no header line");
  }
  FeatureMatrix fm;
  {
    std::istringstream header(line);
    long long n = -1, d = -1, has_labels = -1;
    std::string extra;
    if (!(header >> n >> d >> has_labels) || (header >> extra) || n < 0 || d < 1 ||
        (has_labels != 0 && has_labels != 1)) {
      throw ParseError(ParseError::Kind::kMalformedHeader,
                       "text features: header must be 'N D has_labels', got '" + line + "'");
    }
    fm.rows = static_cast<std::size_t>(n);
    fm.cols = static_cast<std::size_t>(d);
    if (has_labels) fm.labels.emplace();
  }
  fm.values.reserve(fm.rows * fm.cols);
  for (std::size_t r = 0; r < fm.rows; ++r) {
    if (!next_content_line(in, line)) {
      throw ParseError(ParseError::Kind::kTruncated, "text features: expected " +
                                                         std::to_string(fm.rows) + " rows, found " +
                                                         std::to_string(r));
    }
    std::istringstream row(line);
    std::string token;
    for (std::size_t c = 0; c < fm.cols; ++c) {
      if (!(row >> token)) {
        throw ParseError(ParseError::Kind::kTruncated, "text features: row " + std::to_string(r) +
                                                           " has fewer than " +
                                                           std::to_string(fm.cols) + " values");
      }
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') {
        throw ParseError(ParseError::Kind::kBadValue, "text features: cannot parse '" + token +
                                                          "' at row " + std::to_string(r) +
                                                          ", col " + std::to_string(c));
      }
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) {
        throw ParseError(ParseError::Kind::kNonFinite, "text features: non-finite value at row " +
                                                           std::to_string(r) + ", col " +
                                                           std::to_string(c));
      }
      fm.values.push_back(f);
    }
    if (fm.labels) {
      long long label;
      if (!(row >> label)) {
        throw ParseError(ParseError::Kind::kTruncated,
                         "text features: row " + std::to_string(r) + " is missing its label");
      }
      fm.labels->push_back(static_cast<int>(label));
    }
    if (row >> token) {
      throw ParseError(ParseError::Kind::kBadValue,
                       "text features: row " + std::to_string(r) + " has trailing values");
    }
  }
  return fm;
}

}  // namespace

Eigen::MatrixXd FeatureMatrix::to_eigen() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
    }
  }
  return m;
}

void FeatureMatrix::validate() const {
  if (values.size() != rows * cols) throw ValidationError("features: value count mismatch");
  if (labels && labels->size() != rows) throw ValidationError("features: label count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("features: non-finite value at row " + std::to_string(i / cols) +
                            ", col " + std::to_string(i % cols));
    }
  }
}

FeatureMatrix parse_features(const std::string& bytes) {
  if (bytes.empty()) throw ParseError(ParseError::Kind::kEmpty, "features: empty input");
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) return parse_binary(bytes);
  return parse_text(bytes);
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_features(bytes);
}

std::string serialize_features(const FeatureMatrix& fm, FeatureFormat format) {
  fm.validate();
  std::string out;
  if (format == FeatureFormat::kBinary) {
    out.append(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, fm.rows);
    put<std::uint64_t>(out, fm.cols);
    put<std::uint8_t>(out, fm.labels ? 1 : 0);
    for (float v : fm.values) put<float>(out, v);
    if (fm.labels) {
      for (int l : *fm.labels) put<std::int32_t>(out, l);
    }
    return out;
  }
  out += "#dms-features 1\n";
  out += std::to_string(fm.rows) + " " + std::to_string(fm.cols) + " " +
         (fm.labels ? "1" : "0") + "\n";
  char buf[32];
  for (std::size_t r = 0; r < fm.rows; ++r) {
    for (std::size_t c = 0; c < fm.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(fm.at(r, c)));
      if (c) out += ' ';
      out += buf;
    }
    if (fm.labels) out += " " + std::to_string((*fm.labels)[r]);
    out += '\n';
  }
  return out;
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& fm,
                   FeatureFormat format) {
  const std::string bytes = serialize_features(fm, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write feature file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing feature file " + path.string());
}

void SynthSpec::validate() const {
  if (k < 1) throw ValidationError("synth: k must be >= 1");
  if (dim < 1) throw ValidationError("synth: dim must be >= 1");
  if (per_cluster < 1) throw ValidationError("synth: points per cluster must be >= 1");
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw ValidationError("synth: separation must be positive");
  }
  if (!(stddev > 0.0) || !std::isfinite(stddev)) {
    throw ValidationError("synth: stddev must be positive");
  }
}

Eigen::MatrixXd synth_centers(const SynthSpec& spec) {
  spec.validate();
  constexpr int kRestarts = 100;
  constexpr int kDrawsPerCenter = 2000;
  const double min_dist = spec.separation * spec.stddev;
  const double side = 1.25 * min_dist / std::sqrt(spec.dim / 6.0);
  Rng rng(derive_seed(spec.seed, "synth-centers"));
  Eigen::MatrixXd centers(spec.k, spec.dim);
  for (int attempt = 0; attempt < kRestarts; ++attempt) {
    int placed = 0;
    while (placed < spec.k) {
      bool ok = false;
      for (int draw = 0; draw < kDrawsPerCenter && !ok; ++draw) {
        for (int j = 0; j < spec.dim; ++j) centers(placed, j) = rng.uniform(-0.5, 0.5) * side;
        ok = true;
        for (int other = 0; other < placed && ok; ++other) {
          ok = (centers.row(placed) - centers.row(other)).norm() >= min_dist;
        }
      }
      if (!ok) break;
      ++placed;
    }
    if (placed == spec.k) return centers;
  }
  throw ValidationError("synth: cannot place " + std::to_string(spec.k) + " centers " +
                        std::to_string(spec.separation) + " std apart in " +
                        std::to_string(spec.dim) + " dimensions");
}

FeatureMatrix synth_mixture(const SynthSpec& spec) {
  const Eigen::MatrixXd centers = synth_centers(spec);
  Rng rng(derive_seed(spec.seed, "synth-points"));
  FeatureMatrix fm;
  fm.rows = static_cast<std::size_t>(spec.k) * static_cast<std::size_t>(spec.per_cluster);
  fm.cols = static_cast<std::size_t>(spec.dim);
  fm.values.reserve(fm.rows * fm.cols);
  fm.labels.emplace();
  fm.labels->reserve(fm.rows);
  for (int c = 0; c < spec.k; ++c) {
    for (int i = 0; i < spec.per_cluster; ++i) {
      for (int j = 0; j < spec.dim; ++j) {
        fm.values.push_back(static_cast<float>(centers(c, j) + spec.stddev * rng.normal()));
      }
      fm.labels->push_back(c);
    }
  }
  return fm;
}

}  // namespace dms
