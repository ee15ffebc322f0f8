#pragma once

#include <Eigen/Core>
#include <vector>

#include "bsim/dataset.hpp"

namespace bsim {

// Comparison model: visit probability proportional to an exponential
// attractiveness index times a power-law distance decay, with no truncation
// radius.
struct HuffParams {
  Eigen::VectorXd attract_exponents;  // one per store feature
  double distance_decay = 1.0;        // > 0
  Eigen::VectorXd budget_weights;     // one per customer feature

  void validate() const;
};

struct HuffGrid {
  std::vector<double> exponents = {0.5, 1.0, 1.5, 2.0};
  std::vector<double> decays = {0.5, 1.0, 1.5, 2.0, 3.0};
};

struct HuffFit {
  HuffParams params;
  double rss = 0.0;
  double r2 = 0.0;
  double nrmse = 0.0;
  bool used_ridge = false;
  Eigen::VectorXd predictions;  // per-store revenue at the selected grid point
};

// P_ns proportional to exp(a . phi_s) * d_ns^-theta, normalized over stores;
// distances are clamped below at 1e-6.
Eigen::MatrixXd huff_probabilities(const Dataset& data, const HuffParams& params);

// Grid search over (shared attractiveness exponent, distance decay); budget
// weights solved by least squares at each grid point, smallest residual sum
// of squares wins (lexicographically smallest grid point on ties).
HuffFit fit_huff(const Dataset& data, const HuffGrid& grid = {});

}  // namespace bsim
