#pragma once

// Feature matrices on disk.
//
// Text format (".txt" / anything not starting with the binary magic):
//   #dms-features 1            optional version line; other '#' lines are comments
//   N D has_labels             has_labels is 0 or 1
//   x_11 ... x_1D [label_1]    N rows, whitespace separated
//
// Binary format, all integers and floats little-endian:
//   char[8]  "DMSFEAT\0"
//   uint32   version (1)
//   uint64   N
//   uint64   D
//   uint8    has_labels
//   float32  N*D values, row-major
//   int32    N labels (only when has_labels = 1)
//
// Values are stored as 32-bit floats in memory too, so both formats
// round-trip exactly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace dms {

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;  // row-major
  std::optional<std::vector<int>> labels;

  float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  Eigen::MatrixXd to_eigen() const;
  /// Throws ValidationError on shape mismatch or non-finite values.
  void validate() const;

  bool operator==(const FeatureMatrix&) const = default;
};

enum class FeatureFormat { kText, kBinary };

FeatureMatrix load_features(const std::filesystem::path& path);
FeatureMatrix parse_features(const std::string& bytes);
void save_features(const std::filesystem::path& path, const FeatureMatrix& fm,
                   FeatureFormat format = FeatureFormat::kText);
std::string serialize_features(const FeatureMatrix& fm, FeatureFormat format);

struct SynthSpec {
  int k = 5;
  int dim = 16;
  int per_cluster = 200;
  double separation = 8.0;  // minimum center distance, in component std units
  double stddev = 0.5;      // isotropic component standard deviation
  std::uint64_t seed = 0;

  void validate() const;
};

/// Isotropic Gaussian blobs. Centers are drawn uniformly from a cube sized so
/// that the mean pairwise center distance is about 1.25 * separation, and
/// redrawn until every pair is at least separation * stddev apart. Labels are
/// the generating component; rows are grouped by component.
FeatureMatrix synth_mixture(const SynthSpec& spec);

/// The centers `synth_mixture` draws for `spec` (k x dim).
Eigen::MatrixXd synth_centers(const SynthSpec& spec);

}  // namespace dms
