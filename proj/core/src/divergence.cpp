#include "dms/divergence.hpp"

#include <cmath>
#include <string>

#include "dms/error.hpp"

namespace dms {

namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

void require_alpha_closed(double alpha, const char* what) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError(std::string(what) + ": alpha must lie in [0, 1], got " +
                          std::to_string(alpha));
  }
}

void require_alpha_open(double alpha, const char* what) {
  require_alpha_closed(alpha, what);
  if (alpha == 0.0 || alpha == 1.0) {
    throw DegenerateAlphaError(std::string(what) +
                               ": alpha at an endpoint reduces to a one-sided KLD");
  }
}

// Per-dimension closed form of (1-a) KL(g1||m) + a KL(g2||m). The expression
// is written so that swapping (g1, g2) at a = 0.5 performs the same floating
// point operations in the same order.
double skew_term(double mu1, double v1, double mu2, double v2, double a) {
  const double b = 1.0 - a;
  const double prec = b / v1 + a / v2;
  const double va = 1.0 / prec;
  const double ma = va * (b * mu1 / v1 + a * mu2 / v2);
  const double d1 = ma - mu1;
  const double d2 = ma - mu2;
  const double quad = (b * d1 * d1 + a * d2 * d2) * prec;
  const double trace = (b * v1 + a * v2) * prec;
  const double logdet = std::log(va) - (b * std::log(v1) + a * std::log(v2));
  return 0.5 * (quad + trace + logdet - 1.0);
}

}  // namespace

DiagGaussian::DiagGaussian(Eigen::VectorXd mean, Eigen::VectorXd variance)
    : mean_(std::move(mean)), variance_(std::move(variance)) {
  if (mean_.size() < 1) throw ValidationError("DiagGaussian: dimension must be >= 1");
  require_same_dim(mean_.size(), variance_.size(), "DiagGaussian");
  for (Eigen::Index i = 0; i < variance_.size(); ++i) {
    if (!(variance_[i] > 0.0) || !std::isfinite(variance_[i])) {
      throw ValidationError("DiagGaussian: variance[" + std::to_string(i) +
                            "] must be positive and finite");
    }
    if (!std::isfinite(mean_[i])) {
      throw ValidationError("DiagGaussian: mean[" + std::to_string(i) + "] is not finite");
    }
  }
}

DiagGaussian DiagGaussian::scalar(double mean, double variance) {
  return DiagGaussian(Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, variance));
}

DiagGaussian DiagGaussian::from_precision(Eigen::VectorXd mean, const Eigen::VectorXd& precision) {
  return DiagGaussian(std::move(mean), precision.cwiseInverse());
}

double kld_gaussian(const DiagGaussian& q, const DiagGaussian& p) {
  return kld_gaussian_with_gradient(q, p).value;
}

KldGradient kld_gaussian_with_gradient(const DiagGaussian& q, const DiagGaussian& p) {
  require_same_dim(q.dim(), p.dim(), "kld_gaussian");
  const auto d = q.dim();
  KldGradient out{0.0, Eigen::VectorXd(d), Eigen::VectorXd(d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    const double vq = q.variance()[i];
    const double vp = p.variance()[i];
    const double diff = q.mean()[i] - p.mean()[i];
    out.value += 0.5 * (std::log(vp / vq) + (vq + diff * diff) / vp - 1.0);
    out.d_mean[i] = diff / vp;
    out.d_variance[i] = 0.5 * (1.0 / vp - 1.0 / vq);
  }
  return out;
}

SkewParams skew_mixture_params(const DiagGaussian& g1, const DiagGaussian& g2, double alpha) {
  require_alpha_closed(alpha, "skew_mixture_params");
  require_same_dim(g1.dim(), g2.dim(), "skew_mixture_params");
  // The endpoints are returned verbatim rather than through the weighted
  // harmonic mean, which would round.
  if (alpha == 0.0) return {alpha, g1};
  if (alpha == 1.0) return {alpha, g2};
  const double b = 1.0 - alpha;
  const auto d = g1.dim();
  Eigen::VectorXd mean(d), var(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double v1 = g1.variance()[i];
    const double v2 = g2.variance()[i];
    var[i] = 1.0 / (b / v1 + alpha / v2);
    mean[i] = var[i] * (b * g1.mean()[i] / v1 + alpha * g2.mean()[i] / v2);
  }
  return {alpha, DiagGaussian(std::move(mean), std::move(var))};
}

double alpha_jsd(const DiagGaussian& g1, const DiagGaussian& g2, double alpha) {
  require_alpha_open(alpha, "alpha_jsd");
  require_same_dim(g1.dim(), g2.dim(), "alpha_jsd");
  double total = 0.0;
  for (Eigen::Index i = 0; i < g1.dim(); ++i) {
    total += skew_term(g1.mean()[i], g1.variance()[i], g2.mean()[i], g2.variance()[i], alpha);
  }
  return total;
}

AlphaJsdGradient alpha_jsd_with_gradient(const DiagGaussian& g1, const DiagGaussian& g2,
                                         double alpha) {
  require_alpha_open(alpha, "alpha_jsd");
  require_same_dim(g1.dim(), g2.dim(), "alpha_jsd");
  const auto d = g1.dim();
  const double a = alpha;
  const double b = 1.0 - a;
  AlphaJsdGradient out{0.0, Eigen::VectorXd(d), Eigen::VectorXd(d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    const double mu1 = g1.mean()[i], v1 = g1.variance()[i];
    const double mu2 = g2.mean()[i], v2 = g2.variance()[i];
    out.value += skew_term(mu1, v1, mu2, v2, a);

    // J = 1/2 [P Q + P T - ln P - b ln v1 - a ln v2 - 1] with P the mixture
    // precision, Q = b (ma-mu1)^2 + a (ma-mu2)^2, T = b v1 + a v2.
    const double prec = b / v1 + a / v2;
    const double ma = (b * mu1 / v1 + a * mu2 / v2) / prec;
    const double d1 = ma - mu1;
    const double d2 = ma - mu2;
    const double quad = b * d1 * d1 + a * d2 * d2;
    const double trace = b * v1 + a * v2;

    const double dj_dma = prec * (ma - b * mu1 - a * mu2);
    const double dj_dprec = 0.5 * (quad + trace - 1.0 / prec);

    const double dma_dmu1 = b / (v1 * prec);
    out.d_mean[i] = -prec * b * d1 + dj_dma * dma_dmu1;

    const double dprec_dv1 = -b / (v1 * v1);
    const double dma_dv1 = -b * (mu1 - ma) / (v1 * v1 * prec);
    const double explicit_dv1 = 0.5 * (prec * b - b / v1);
    out.d_variance[i] = explicit_dv1 + dj_dprec * dprec_dv1 + dj_dma * dma_dv1;
  }
  return out;
}

double alpha_jsd_first_order(std::span<const double> mu1, std::span<const double> mu2,
                             double alpha) {
  require_alpha_closed(alpha, "alpha_jsd_first_order");
  if (mu1.size() != mu2.size()) {
    throw ValidationError("alpha_jsd_first_order: length mismatch (" +
                          std::to_string(mu1.size()) + " vs " + std::to_string(mu2.size()) + ")");
  }
  const double b = 1.0 - alpha;
  double total = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    const double ma = b * mu1[i] + alpha * mu2[i];
    const double d1 = ma - mu1[i];
    const double d2 = ma - mu2[i];
    total += b * d1 * d1 + alpha * d2 * d2;
  }
  return total;
}

std::vector<AsymmetryRow> asymmetry_table(double mu1, std::span<const double> mu2_grid,
                                          double alpha) {
  if (mu2_grid.empty()) throw ValidationError("asymmetry_table: grid is empty");
  require_alpha_closed(alpha, "asymmetry_table");
  const auto base = DiagGaussian::scalar(mu1, 1.0);
  std::vector<AsymmetryRow> rows;
  rows.reserve(mu2_grid.size());
  for (double mu2 : mu2_grid) {
    const double kld = kld_gaussian(base, DiagGaussian::scalar(mu2, 1.0));
    const double ajsd = alpha_jsd_first_order(std::span(&mu1, 1), std::span(&mu2, 1), alpha);
    rows.push_back({mu2, kld, ajsd});
  }
  return rows;
}

std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !std::isfinite(step) || !std::isfinite(start) || !std::isfinite(stop)) {
    throw ValidationError("linear_grid: step must be positive and bounds finite");
  }
  if (stop < start) throw ValidationError("linear_grid: stop must be >= start");
  const auto intervals = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(intervals) + 1);
  if (intervals == 0) {
    grid.push_back(start);
    return grid;
  }
  const double end = start + static_cast<double>(intervals) * step;
  const double n = static_cast<double>(intervals);
  for (long i = 0; i <= intervals; ++i) {
    const double t = static_cast<double>(i);
    grid.push_back((start * (n - t) + end * t) / n);
  }
  return grid;
}

}  // namespace dms
