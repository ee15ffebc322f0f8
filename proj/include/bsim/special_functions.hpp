#pragma once

#include <vector>

namespace bsim {

// Log-gamma for x > 0 (Lanczos, g = 7). Absolute error < 1e-12 on the
// positive axis. Throws std::domain_error for x <= 0.
double log_gamma(double x);

// Digamma / trigamma for x > 0 via upward recurrence into the asymptotic
// series. Absolute error < 1e-10.
double digamma(double x);
double trigamma(double x);

// Standard normal inverse CDF for p in (0, 1). Acklam's rational
// approximation polished with one Halley step; |error| <= 1e-9.
double standard_normal_quantile(double p);

double standard_normal_cdf(double x);

// Linear-interpolated order statistic (same convention as numpy's default).
// Throws std::invalid_argument on an empty sample or q outside (0, 1).
double empirical_quantile(std::vector<double> samples, double q);

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

}  // namespace bsim
