#include "bsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bsim {

namespace {

void check_pair(const PredictionPair& p) {
  if (p.observed.size() == 0 || p.observed.size() != p.predicted.size())
    throw std::invalid_argument("PredictionPair: vectors must be nonempty and equal length");
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double r_squared(const PredictionPair& p) {
  check_pair(p);
  const double mean = p.observed.mean();
  const double ss_tot = (p.observed.array() - mean).square().sum();
  if (ss_tot == 0.0)
    throw std::invalid_argument("r_squared: observed values have zero variance");
  const double ss_res = (p.observed - p.predicted).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double nrmse(const PredictionPair& p) {
  check_pair(p);
  const double mean = p.observed.mean();
  if (mean == 0.0)
    throw std::invalid_argument("nrmse: observed values have zero mean");
  const double rmse =
      std::sqrt((p.observed - p.predicted).squaredNorm() / p.observed.size());
  return rmse / mean;
}

std::tuple<double, double, double> bias_mse_coverage(
    const std::vector<double>& estimates,
    const std::vector<std::pair<double, double>>& cis, double truth) {
  if (estimates.empty() || estimates.size() != cis.size())
    throw std::invalid_argument(
        "bias_mse_coverage: estimates and CIs must be nonempty and equal length");
  double bias = 0.0, mse = 0.0, covered = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (cis[i].first > cis[i].second)
      throw std::invalid_argument("bias_mse_coverage: CI with lo > hi");
    const double diff = estimates[i] - truth;
    bias += diff;
    mse += diff * diff;
    if (truth >= cis[i].first && truth <= cis[i].second) covered += 1.0;
  }
  const double n = static_cast<double>(estimates.size());
  return {bias / n, mse / n, covered / n};
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: vectors must be equal length >= 2");
  if ((a.array() == a[0]).all() || (b.array() == b[0]).all())
    throw std::invalid_argument("spearman: undefined for a constant vector");
  const Eigen::VectorXd ra = average_ranks(a);
  const Eigen::VectorXd rb = average_ranks(b);
  const double ma = ra.mean(), mb = rb.mean();
  const Eigen::ArrayXd da = ra.array() - ma, db = rb.array() - mb;
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

}  // namespace bsim
