#include "bsim/distributions.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "bsim/special_functions.hpp"

namespace bsim {

GaussianDiag::GaussianDiag(Eigen::VectorXd m, Eigen::VectorXd v)
    : mean(std::move(m)), var(std::move(v)) {
  if (mean.size() != var.size())
    throw std::invalid_argument("GaussianDiag: mean/var dimension mismatch");
  if (!mean.allFinite())
    throw std::invalid_argument("GaussianDiag: mean must be finite");
  if (!((var.array() > 0.0).all()) || !var.allFinite())
    throw std::invalid_argument("GaussianDiag: variances must be positive and finite");
}

GaussianDiag GaussianDiag::isotropic(Eigen::VectorXd m, double v) {
  Eigen::VectorXd var = Eigen::VectorXd::Constant(m.size(), v);
  return GaussianDiag(std::move(m), std::move(var));
}

GammaDist::GammaDist(double shape_, double rate_) : shape(shape_), rate(rate_) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw std::invalid_argument("GammaDist: shape and rate must be positive and finite");
}

double gaussian_logpdf(const GaussianDiag& d, const Eigen::VectorXd& x) {
  if (x.size() != d.dim())
    throw std::invalid_argument("gaussian_logpdf: dimension mismatch");
  const Eigen::ArrayXd r = (x - d.mean).array();
  return (-0.5 * (2.0 * M_PI * d.var.array()).log() -
          r.square() / (2.0 * d.var.array()))
      .sum();
}

double gamma_logpdf(const GammaDist& d, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("gamma_logpdf: x must be positive");
  return d.shape * std::log(d.rate) - log_gamma(d.shape) +
         (d.shape - 1.0) * std::log(x) - d.rate * x;
}

double kl_gaussian(const GaussianDiag& q, const GaussianDiag& p) {
  if (q.dim() != p.dim())
    throw std::invalid_argument("kl_gaussian: dimension mismatch");
  const Eigen::ArrayXd vq = q.var.array(), vp = p.var.array();
  const Eigen::ArrayXd dm = (q.mean - p.mean).array();
  return 0.5 * ((vp / vq).log() + (vq + dm.square()) / vp - 1.0).sum();
}

double kl_gamma(const GammaDist& q, const GammaDist& p) {
  return (q.shape - p.shape) * digamma(q.shape) - log_gamma(q.shape) +
         log_gamma(p.shape) + p.shape * (std::log(q.rate) - std::log(p.rate)) +
         q.shape * (p.rate - q.rate) / q.rate;
}

Eigen::VectorXd sample_gaussian(const GaussianDiag& d, RngStream& rng) {
  Eigen::VectorXd out(d.dim());
  for (Eigen::Index i = 0; i < d.dim(); ++i)
    out[i] = d.mean[i] + std::sqrt(d.var[i]) * rng.normal();
  return out;
}

double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("sample_gamma: shape and rate must be positive");
  if (shape < 1.0) {
    // boost to shape + 1, then scale by U^(1/shape)
    const double g = sample_gamma(shape + 1.0, 1.0, rng);
    const double u = rng.uniform();
    return g * std::pow(u, 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_gamma(const GammaDist& d, RngStream& rng) {
  return sample_gamma(d.shape, d.rate, rng);
}

double gaussian_quantile(const GaussianDiag& d, double q) {
  if (d.dim() != 1)
    throw std::invalid_argument("gaussian_quantile: distribution must be 1-dim");
  return d.mean[0] + std::sqrt(d.var[0]) * standard_normal_quantile(q);
}

}  // namespace bsim
