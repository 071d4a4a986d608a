#pragma once

// Fully connected autoencoder with a Gaussian bottleneck.
//
// Encoder: dims[0] -> dims[1] -> ... -> dims[n-2] with leaky-ReLU, then a
// linear mean head (and optional linear log-variance head) to dims[n-1].
// Decoder mirrors the encoder; its last layer is linear.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dms/divergence.hpp"
#include "dms/rng.hpp"

namespace dms {

enum class Activation { kIdentity, kLeakyRelu };

inline constexpr double kLeakySlope = 0.01;

struct Dense {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;

  Eigen::Index in_dim() const noexcept { return weight.cols(); }
  Eigen::Index out_dim() const noexcept { return weight.rows(); }
};

/// kUniform: U(-sqrt(3/fan_in), sqrt(3/fan_in)). kOrthogonal: random
/// orthonormal rows or columns, gain sqrt(2) on leaky-ReLU layers.
enum class NetInit { kUniform, kOrthogonal };

struct NetConfig {
  std::vector<int> dims{512, 384, 256, 128};  // input, hidden..., latent
  bool sigma_head = false;
  NetInit init = NetInit::kOrthogonal;
};

class LatentNet {
 public:
  LatentNet() = default;

  /// Fan-in scaled uniform weights, zero biases.
  static LatentNet random(const NetConfig& config, std::uint64_t seed);
  static LatentNet zeros(const NetConfig& config);
  /// Same shapes as `other`, all parameters zero. Used for gradients.
  static LatentNet zeros_like(const LatentNet& other);

  std::vector<Dense> encoder;
  Dense mean_head;
  std::optional<Dense> logvar_head;
  std::vector<Dense> decoder;

  Eigen::Index input_dim() const;
  Eigen::Index latent_dim() const { return mean_head.out_dim(); }
  bool has_sigma_head() const noexcept { return logvar_head.has_value(); }

  /// Throws ValidationError when layer dimensions do not chain.
  void validate() const;
  bool same_shape(const LatentNet& other) const;

  /// this += scale * other; shapes must match.
  void add_scaled(const LatentNet& other, double scale);
  double squared_norm() const;

  /// Every parameter in a fixed order; used by finite-difference checks.
  std::vector<double*> parameters();
};

struct LatentCode {
  Eigen::VectorXd mu;
  Eigen::VectorXd variance;  // all ones without a sigma head

  DiagGaussian as_gaussian() const { return DiagGaussian(mu, variance); }
};

LatentCode encode(const LatentNet& net, const Eigen::VectorXd& x);
Eigen::VectorXd decode(const LatentNet& net, const Eigen::VectorXd& mu);

/// mu + sqrt(variance) * eps, eps ~ N(0, I). Negative variances are floored at 0.
Eigen::VectorXd sample_latent(const LatentCode& code, Rng& rng);

struct NetLoss {
  double loss;
  LatentNet gradient;
};

/// 0.5 ||x - decode(encode(x).mu)||^2 and its gradient w.r.t. every weight.
NetLoss reconstruction_loss(const LatentNet& net, const Eigen::VectorXd& x);

struct CodeLoss {
  double loss;
  Eigen::VectorXd d_mu;
  Eigen::VectorXd d_variance;
};

/// lambda3 * alpha_jsd(code, component, alpha) and its gradient w.r.t. the
/// code's mean and variance.
CodeLoss regularizer_loss(const LatentCode& code, const DiagGaussian& component, double alpha,
                          double lambda3);

/// lambda3 * KL(code || component); the baseline regularizer.
CodeLoss kld_regularizer_loss(const LatentCode& code, const DiagGaussian& component,
                              double lambda3);

/// Pull latent-code gradients back onto the encoder weights. The decoder part
/// of the returned gradient is zero. `d_variance` is ignored without a sigma
/// head.
LatentNet encoder_backward(const LatentNet& net, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& d_mu, const Eigen::VectorXd& d_variance);

/// net -= learning_rate * gradient.
void sgd_step(LatentNet& net, const LatentNet& gradient, double learning_rate);

}  // namespace dms
