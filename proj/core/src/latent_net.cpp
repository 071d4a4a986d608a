#include "dms/latent_net.hpp"

#include <cmath>

#include <Eigen/QR>
#include <string>

#include "dms/error.hpp"

namespace dms {

namespace {

Dense make_layer(Eigen::Index in, Eigen::Index out, Activation act) {
  return Dense{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out), act};
}

void fill_uniform(Dense& layer, Rng& rng) {
  const double limit = std::sqrt(3.0 / static_cast<double>(layer.in_dim()));
  for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      layer.weight(i, j) = rng.uniform(-limit, limit);
    }
  }
}

// Rows (or columns, whichever are fewer) orthonormal, scaled by `gain`.
void fill_orthogonal(Dense& layer, Rng& rng, double gain) {
  const Eigen::Index rows = layer.out_dim();
  const Eigen::Index cols = layer.in_dim();
  const Eigen::Index tall = std::max(rows, cols);
  const Eigen::Index thin = std::min(rows, cols);
  Eigen::MatrixXd g(tall, thin);
  for (Eigen::Index j = 0; j < thin; ++j)
    for (Eigen::Index i = 0; i < tall; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, thin);
  // Sign fix so the draw is uniform over orthogonal matrices.
  const Eigen::VectorXd d = qr.matrixQR().diagonal();
  for (Eigen::Index j = 0; j < thin; ++j) {
    if (d(j) < 0) q.col(j) *= -1.0;
  }
  layer.weight = gain * (rows >= cols ? q : Eigen::MatrixXd(q.transpose()));
}

void fill(Dense& layer, Rng& rng, NetInit init) {
  if (init == NetInit::kUniform) {
    fill_uniform(layer, rng);
  } else {
    fill_orthogonal(layer, rng, layer.activation == Activation::kLeakyRelu ? std::sqrt(2.0) : 1.0);
  }
}

Eigen::VectorXd activate(const Eigen::VectorXd& pre, Activation act) {
  if (act == Activation::kIdentity) return pre;
  return pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

Eigen::VectorXd activation_slope(const Eigen::VectorXd& pre, Activation act) {
  if (act == Activation::kIdentity) return Eigen::VectorXd::Ones(pre.size());
  return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
}

// Forward trace through a stack of layers: inputs[i] feeds layer i,
// pre[i] is its pre-activation.
struct Trace {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> pre;
  Eigen::VectorXd output;
};

Trace forward(const std::vector<Dense>& layers, const Eigen::VectorXd& x) {
  Trace t;
  t.inputs.reserve(layers.size());
  t.pre.reserve(layers.size());
  Eigen::VectorXd h = x;
  for (const auto& layer : layers) {
    t.inputs.push_back(h);
    t.pre.push_back(layer.weight * h + layer.bias);
    h = activate(t.pre.back(), layer.activation);
  }
  t.output = std::move(h);
  return t;
}

// Accumulates parameter gradients for `layers` given d(loss)/d(output) and
// returns d(loss)/d(input).
Eigen::VectorXd backward(const std::vector<Dense>& layers, const Trace& t, Eigen::VectorXd grad,
                         std::vector<Dense>& out) {
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Eigen::VectorXd delta =
        grad.cwiseProduct(activation_slope(t.pre[i], layers[i].activation));
    out[i].weight.noalias() += delta * t.inputs[i].transpose();
    out[i].bias += delta;
    grad = layers[i].weight.transpose() * delta;
  }
  return grad;
}

void require_same_shape(const Dense& a, const Dense& b) {
  if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
      a.bias.size() != b.bias.size()) {
    throw ValidationError("latent_net: parameter shape mismatch");
  }
}

template <class F>
void for_each_layer_pair(LatentNet& a, const LatentNet& b, F&& f) {
  if (!a.same_shape(b)) throw ValidationError("latent_net: parameter shape mismatch");
  for (std::size_t i = 0; i < a.encoder.size(); ++i) f(a.encoder[i], b.encoder[i]);
  f(a.mean_head, b.mean_head);
  if (a.logvar_head) f(*a.logvar_head, *b.logvar_head);
  for (std::size_t i = 0; i < a.decoder.size(); ++i) f(a.decoder[i], b.decoder[i]);
}

}  // namespace

LatentNet LatentNet::zeros(const NetConfig& config) {
  const auto& dims = config.dims;
  if (dims.size() < 2) throw ValidationError("latent_net: need at least input and latent dims");
  for (int d : dims) {
    if (d < 1) throw ValidationError("latent_net: layer dimensions must be >= 1");
  }
  LatentNet net;
  const std::size_t hidden = dims.size() - 2;
  for (std::size_t i = 0; i < hidden; ++i) {
    net.encoder.push_back(make_layer(dims[i], dims[i + 1], Activation::kLeakyRelu));
  }
  const int bottleneck_in = dims[hidden];
  const int latent = dims.back();
  net.mean_head = make_layer(bottleneck_in, latent, Activation::kIdentity);
  if (config.sigma_head) net.logvar_head = make_layer(bottleneck_in, latent, Activation::kIdentity);
  // Decoder mirrors the encoder: latent -> dims[hidden] -> ... -> dims[0].
  for (std::size_t i = dims.size() - 1; i > 0; --i) {
    const bool last = i == 1;
    net.decoder.push_back(make_layer(dims[i], dims[i - 1],
                                     last ? Activation::kIdentity : Activation::kLeakyRelu));
  }
  return net;
}

LatentNet LatentNet::random(const NetConfig& config, std::uint64_t seed) {
  LatentNet net = zeros(config);
  Rng rng(seed);
  for (auto& l : net.encoder) fill(l, rng, config.init);
  fill(net.mean_head, rng, config.init);
  if (net.logvar_head) {
    // Starts near unit variance.
    fill_uniform(*net.logvar_head, rng);
    net.logvar_head->weight *= 0.1;
  }
  for (auto& l : net.decoder) fill(l, rng, config.init);
  return net;
}

LatentNet LatentNet::zeros_like(const LatentNet& other) {
  LatentNet out = other;
  auto clear = [](Dense& l) {
    l.weight.setZero();
    l.bias.setZero();
  };
  for (auto& l : out.encoder) clear(l);
  clear(out.mean_head);
  if (out.logvar_head) clear(*out.logvar_head);
  for (auto& l : out.decoder) clear(l);
  return out;
}

Eigen::Index LatentNet::input_dim() const {
  return encoder.empty() ? mean_head.in_dim() : encoder.front().in_dim();
}

void LatentNet::validate() const {
  Eigen::Index width = input_dim();
  for (const auto& l : encoder) {
    if (l.in_dim() != width || l.bias.size() != l.out_dim()) {
      throw ValidationError("latent_net: encoder layers do not chain");
    }
    width = l.out_dim();
  }
  if (mean_head.in_dim() != width || mean_head.bias.size() != mean_head.out_dim()) {
    throw ValidationError("latent_net: mean head does not match the encoder");
  }
  if (logvar_head && (logvar_head->in_dim() != width || logvar_head->out_dim() != latent_dim() ||
                      logvar_head->bias.size() != latent_dim())) {
    throw ValidationError("latent_net: log-variance head does not match the mean head");
  }
  width = latent_dim();
  for (const auto& l : decoder) {
    if (l.in_dim() != width || l.bias.size() != l.out_dim()) {
      throw ValidationError("latent_net: decoder layers do not chain");
    }
    width = l.out_dim();
  }
  if (decoder.empty() || width != input_dim()) {
    throw ValidationError("latent_net: decoder output must match the input dimension");
  }
}

bool LatentNet::same_shape(const LatentNet& other) const {
  auto same = [](const Dense& a, const Dense& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.bias.size() == b.bias.size();
  };
  if (encoder.size() != other.encoder.size() || decoder.size() != other.decoder.size() ||
      logvar_head.has_value() != other.logvar_head.has_value()) {
    return false;
  }
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    if (!same(encoder[i], other.encoder[i])) return false;
  }
  if (!same(mean_head, other.mean_head)) return false;
  if (logvar_head && !same(*logvar_head, *other.logvar_head)) return false;
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    if (!same(decoder[i], other.decoder[i])) return false;
  }
  return true;
}

void LatentNet::add_scaled(const LatentNet& other, double scale) {
  for_each_layer_pair(*this, other, [scale](Dense& a, const Dense& b) {
    require_same_shape(a, b);
    a.weight += scale * b.weight;
    a.bias += scale * b.bias;
  });
}

double LatentNet::squared_norm() const {
  double total = 0.0;
  auto add = [&total](const Dense& l) {
    total += l.weight.squaredNorm() + l.bias.squaredNorm();
  };
  for (const auto& l : encoder) add(l);
  add(mean_head);
  if (logvar_head) add(*logvar_head);
  for (const auto& l : decoder) add(l);
  return total;
}

std::vector<double*> LatentNet::parameters() {
  std::vector<double*> out;
  auto push = [&out](Dense& l) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) out.push_back(l.weight.data() + i);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias.data() + i);
  };
  for (auto& l : encoder) push(l);
  push(mean_head);
  if (logvar_head) push(*logvar_head);
  for (auto& l : decoder) push(l);
  return out;
}

LatentCode encode(const LatentNet& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim()) {
    throw ValidationError("encode: input has " + std::to_string(x.size()) +
                          " entries, network expects " + std::to_string(net.input_dim()));
  }
  const Trace t = forward(net.encoder, x);
  LatentCode code;
  code.mu = net.mean_head.weight * t.output + net.mean_head.bias;
  if (net.logvar_head) {
    code.variance =
        (net.logvar_head->weight * t.output + net.logvar_head->bias).array().exp().matrix();
  } else {
    code.variance = Eigen::VectorXd::Ones(code.mu.size());
  }
  return code;
}

Eigen::VectorXd decode(const LatentNet& net, const Eigen::VectorXd& mu) {
  if (mu.size() != net.latent_dim()) throw ValidationError("decode: latent dimension mismatch");
  return forward(net.decoder, mu).output;
}

Eigen::VectorXd sample_latent(const LatentCode& code, Rng& rng) {
  Eigen::VectorXd z(code.mu.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = code.mu[i] + std::sqrt(std::max(code.variance[i], 0.0)) * rng.normal();
  }
  return z;
}

NetLoss reconstruction_loss(const LatentNet& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim()) throw ValidationError("reconstruction_loss: input mismatch");
  const Trace enc = forward(net.encoder, x);
  const Eigen::VectorXd mu = net.mean_head.weight * enc.output + net.mean_head.bias;
  const Trace dec = forward(net.decoder, mu);
  const Eigen::VectorXd residual = dec.output - x;

  NetLoss out{0.5 * residual.squaredNorm(), LatentNet::zeros_like(net)};
  const Eigen::VectorXd d_mu = backward(net.decoder, dec, residual, out.gradient.decoder);
  out.gradient.mean_head.weight.noalias() += d_mu * enc.output.transpose();
  out.gradient.mean_head.bias += d_mu;
  const Eigen::VectorXd d_hidden = net.mean_head.weight.transpose() * d_mu;
  backward(net.encoder, enc, d_hidden, out.gradient.encoder);
  return out;
}

CodeLoss regularizer_loss(const LatentCode& code, const DiagGaussian& component, double alpha,
                          double lambda3) {
  if (!(lambda3 >= 0.0 && lambda3 <= 1.0)) {
    throw ValidationError("regularizer_loss: lambda3 must lie in [0, 1]");
  }
  const auto g = alpha_jsd_with_gradient(code.as_gaussian(), component, alpha);
  return {lambda3 * g.value, lambda3 * g.d_mean, lambda3 * g.d_variance};
}

CodeLoss kld_regularizer_loss(const LatentCode& code, const DiagGaussian& component,
                              double lambda3) {
  if (!(lambda3 >= 0.0 && lambda3 <= 1.0)) {
    throw ValidationError("kld_regularizer_loss: lambda3 must lie in [0, 1]");
  }
  const auto g = kld_gaussian_with_gradient(code.as_gaussian(), component);
  return {lambda3 * g.value, lambda3 * g.d_mean, lambda3 * g.d_variance};
}

LatentNet encoder_backward(const LatentNet& net, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& d_mu, const Eigen::VectorXd& d_variance) {
  if (x.size() != net.input_dim()) throw ValidationError("encoder_backward: input mismatch");
  if (d_mu.size() != net.latent_dim()) throw ValidationError("encoder_backward: d_mu mismatch");
  const Trace enc = forward(net.encoder, x);
  LatentNet grad = LatentNet::zeros_like(net);
  grad.mean_head.weight.noalias() += d_mu * enc.output.transpose();
  grad.mean_head.bias += d_mu;
  Eigen::VectorXd d_hidden = net.mean_head.weight.transpose() * d_mu;
  if (net.logvar_head) {
    if (d_variance.size() != net.latent_dim()) {
      throw ValidationError("encoder_backward: d_variance mismatch");
    }
    const Eigen::VectorXd logvar = net.logvar_head->weight * enc.output + net.logvar_head->bias;
    // d/d(logvar) = d/d(var) * var
    const Eigen::VectorXd d_logvar = d_variance.cwiseProduct(logvar.array().exp().matrix());
    grad.logvar_head->weight.noalias() += d_logvar * enc.output.transpose();
    grad.logvar_head->bias += d_logvar;
    d_hidden += net.logvar_head->weight.transpose() * d_logvar;
  }
  backward(net.encoder, enc, d_hidden, grad.encoder);
  return grad;
}

void sgd_step(LatentNet& net, const LatentNet& gradient, double learning_rate) {
  if (!net.same_shape(gradient)) throw ValidationError("sgd_step: gradient shape mismatch");
  if (learning_rate == 0.0) return;
  net.add_scaled(gradient, -learning_rate);
}

}  // namespace dms
