#pragma once

// Closed-form divergences between diagonal Gaussians.
//
// All second-order quantities are variances. Mixture components that carry a
// precision are converted with `DiagGaussian::from_precision` before they
// reach these functions.

#include <span>
#include <vector>

#include <Eigen/Core>

namespace dms {

inline constexpr double kDefaultAlpha = 0.65;

class DiagGaussian {
 public:
  /// Throws ValidationError unless sizes match, d >= 1 and every variance > 0.
  DiagGaussian(Eigen::VectorXd mean, Eigen::VectorXd variance);

  /// Scalar convenience: N(mean, variance) in one dimension.
  static DiagGaussian scalar(double mean, double variance);
  /// Variance = 1 / precision, per dimension.
  static DiagGaussian from_precision(Eigen::VectorXd mean, const Eigen::VectorXd& precision);

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::VectorXd& variance() const noexcept { return variance_; }
  Eigen::Index dim() const noexcept { return mean_.size(); }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd variance_;
};

struct SkewParams {
  double alpha;
  DiagGaussian mixture;  // normalized weighted geometric mean of the pair
};

/// KL(q || p). The first slot is the encoder distribution, the second the
/// mixture component.
double kld_gaussian(const DiagGaussian& q, const DiagGaussian& p);

/// Per dimension: 1/var_a = (1-alpha)/var_1 + alpha/var_2 and
/// mean_a = var_a * ((1-alpha) mean_1/var_1 + alpha mean_2/var_2).
SkewParams skew_mixture_params(const DiagGaussian& g1, const DiagGaussian& g2, double alpha);

/// (1-alpha) KL(g1 || m) + alpha KL(g2 || m) with m the skew mixture of
/// `skew_mixture_params`, evaluated in closed form. Requires 0 < alpha < 1;
/// the endpoints throw DegenerateAlphaError.
double alpha_jsd(const DiagGaussian& g1, const DiagGaussian& g2, double alpha = kDefaultAlpha);

/// Gradient of `alpha_jsd` with respect to the first argument's mean and
/// variance.
struct AlphaJsdGradient {
  double value;
  Eigen::VectorXd d_mean;
  Eigen::VectorXd d_variance;
};
AlphaJsdGradient alpha_jsd_with_gradient(const DiagGaussian& g1, const DiagGaussian& g2,
                                         double alpha = kDefaultAlpha);

/// Gradient of `kld_gaussian` with respect to q's mean and variance.
struct KldGradient {
  double value;
  Eigen::VectorXd d_mean;
  Eigen::VectorXd d_variance;
};
KldGradient kld_gaussian_with_gradient(const DiagGaussian& q, const DiagGaussian& p);

/// Means-only skew divergence: sum of (1-alpha)(m-mu1)^2 + alpha(m-mu2)^2 with
/// m = (1-alpha) mu1 + alpha mu2.
double alpha_jsd_first_order(std::span<const double> mu1, std::span<const double> mu2,
                             double alpha = kDefaultAlpha);

struct AsymmetryRow {
  double mu2;
  double kld;
  double ajsd;
};

/// Unit-variance KLD and first-order skew divergence between N(mu1, 1) and
/// N(mu2, 1) for every mu2 in the grid.
std::vector<AsymmetryRow> asymmetry_table(double mu1, std::span<const double> mu2_grid,
                                          double alpha = kDefaultAlpha);

/// Inclusive grid start, start+step, ..., stop. Points are interpolated from
/// the endpoints so that values such as 1.0 on a 0.1 grid come out exact.
std::vector<double> linear_grid(double start, double stop, double step);

}  // namespace dms
