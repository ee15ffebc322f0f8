#pragma once

#include <Eigen/Core>

#include "bsim/rng.hpp"

namespace bsim {

// Diagonal-covariance Gaussian in any dimension.
struct GaussianDiag {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // elementwise variances, strictly positive

  GaussianDiag() = default;
  GaussianDiag(Eigen::VectorXd m, Eigen::VectorXd v);
  static GaussianDiag isotropic(Eigen::VectorXd m, double v);

  Eigen::Index dim() const { return mean.size(); }
};

// Gamma in the shape-rate parameterization: E[x] = shape / rate.
struct GammaDist {
  double shape = 1.0;
  double rate = 1.0;

  GammaDist() = default;
  GammaDist(double shape_, double rate_);

  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
};

double gaussian_logpdf(const GaussianDiag& d, const Eigen::VectorXd& x);
double gamma_logpdf(const GammaDist& d, double x);

// KL(q || p) for matching families, in closed form.
double kl_gaussian(const GaussianDiag& q, const GaussianDiag& p);
double kl_gamma(const GammaDist& q, const GammaDist& p);

Eigen::VectorXd sample_gaussian(const GaussianDiag& d, RngStream& rng);

// Marsaglia-Tsang; valid for all shape > 0 via the shape-boost trick.
double sample_gamma(const GammaDist& d, RngStream& rng);
double sample_gamma(double shape, double rate, RngStream& rng);

// Inverse CDF of a one-dimensional Gaussian.
double gaussian_quantile(const GaussianDiag& d, double q);

}  // namespace bsim
