#pragma once

#include <Eigen/Core>
#include <tuple>
#include <utility>
#include <vector>

namespace bsim {

struct PredictionPair {
  Eigen::VectorXd observed;
  Eigen::VectorXd predicted;
};

// 1 - SS_res / SS_tot, SS_tot about the observed mean. Throws when the
// observed vector has zero variance.
double r_squared(const PredictionPair& p);

// RMSE divided by the mean of the observed values. Throws at zero mean.
double nrmse(const PredictionPair& p);

// Replication metrics for one scalar parameter. CIs are closed intervals.
std::tuple<double, double, double> bias_mse_coverage(
    const std::vector<double>& estimates,
    const std::vector<std::pair<double, double>>& cis, double truth);

// Spearman rank correlation with average ranks for ties. Throws on constant
// input (undefined).
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace bsim
