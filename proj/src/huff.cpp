#include "bsim/huff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bsim/metrics.hpp"

namespace bsim {

void HuffParams::validate() const {
  if (!(distance_decay > 0.0))
    throw std::invalid_argument("HuffParams: distance_decay must be positive");
  if (!attract_exponents.allFinite() || !budget_weights.allFinite())
    throw std::invalid_argument("HuffParams: non-finite coefficient");
}

Eigen::MatrixXd huff_probabilities(const Dataset& data, const HuffParams& params) {
  data.validate();
  params.validate();
  if (params.attract_exponents.size() != data.store_feature_dim())
    throw std::invalid_argument("huff_probabilities: exponent dimension mismatch");
  const int n = data.n_customers(), s_count = data.n_stores();

  Eigen::VectorXd attract(s_count);
  for (int s = 0; s < s_count; ++s)
    attract[s] = params.attract_exponents.dot(data.stores[s].features);

  Eigen::MatrixXd probs(n, s_count);
  for (int i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd logw(s_count);
    for (int s = 0; s < s_count; ++s) {
      const double d = std::max(
          euclidean_distance(data.customers[i].location, data.stores[s].location),
          1e-6);
      logw[s] = attract[s] - params.distance_decay * std::log(d);
      best = std::max(best, logw[s]);
    }
    const Eigen::ArrayXd w = (logw.array() - best).exp();
    probs.row(i) = (w / w.sum()).transpose();
  }
  return probs;
}

HuffFit fit_huff(const Dataset& data, const HuffGrid& grid) {
  data.validate();
  if (grid.exponents.empty() || grid.decays.empty())
    throw std::invalid_argument("fit_huff: empty grid");
  std::vector<double> exponents = grid.exponents;
  std::vector<double> decays = grid.decays;
  std::sort(exponents.begin(), exponents.end());
  std::sort(decays.begin(), decays.end());

  const Eigen::MatrixXd v = data.customer_feature_matrix();
  const Eigen::VectorXd y = data.revenues();

  HuffFit best;
  best.rss = std::numeric_limits<double>::infinity();
  for (const double a : exponents) {
    for (const double theta : decays) {
      HuffParams p;
      p.attract_exponents =
          Eigen::VectorXd::Constant(data.store_feature_dim(), a);
      p.distance_decay = theta;
      p.budget_weights = Eigen::VectorXd::Zero(data.customer_feature_dim());
      const Eigen::MatrixXd probs = huff_probabilities(data, p);
      const Eigen::MatrixXd x = probs.transpose() * v;  // S x (P-2)

      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
      Eigen::VectorXd w;
      bool ridge = false;
      if (qr.rank() < x.cols()) {
        // ridge fallback for a singular system
        const Eigen::MatrixXd xtx =
            x.transpose() * x +
            1e-8 * Eigen::MatrixXd::Identity(x.cols(), x.cols());
        w = xtx.ldlt().solve(x.transpose() * y);
        ridge = true;
      } else {
        w = qr.solve(y);
      }
      const Eigen::VectorXd pred = x * w;
      const double rss = (y - pred).squaredNorm();
      if (rss < best.rss) {
        p.budget_weights = w;
        best.params = p;
        best.rss = rss;
        best.used_ridge = ridge;
        best.predictions = pred;
      }
    }
  }
  // variance-free targets get r2 = 0 by convention instead of an error
  const double ss_tot = (y.array() - y.mean()).square().sum();
  best.r2 = ss_tot == 0.0 ? 0.0 : 1.0 - best.rss / ss_tot;
  const double rmse = std::sqrt(best.rss / y.size());
  best.nrmse = y.mean() == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                               : rmse / y.mean();
  return best;
}

}  // namespace bsim
