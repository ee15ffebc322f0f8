#include "bsim/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace bsim {

void ModelConfig::validate() const {
  if (!(truncation_radius > 0.0) || !std::isfinite(truncation_radius))
    throw std::invalid_argument("ModelConfig: truncation_radius must be positive");
}

int Dataset::store_feature_dim() const {
  return stores.empty() ? 0 : static_cast<int>(stores.front().features.size());
}

int Dataset::customer_feature_dim() const {
  return customers.empty() ? 0 : static_cast<int>(customers.front().features.size());
}

Eigen::MatrixXd Dataset::store_feature_matrix() const {
  Eigen::MatrixXd m(n_stores(), store_feature_dim());
  for (int s = 0; s < n_stores(); ++s) m.row(s) = stores[s].features.transpose();
  return m;
}

Eigen::MatrixXd Dataset::customer_feature_matrix() const {
  Eigen::MatrixXd m(n_customers(), customer_feature_dim());
  for (int n = 0; n < n_customers(); ++n) m.row(n) = customers[n].features.transpose();
  return m;
}

Eigen::VectorXd Dataset::revenues() const {
  Eigen::VectorXd y(n_stores());
  for (int s = 0; s < n_stores(); ++s) y[s] = stores[s].revenue;
  return y;
}

void Dataset::validate() const {
  if (stores.empty()) throw std::invalid_argument("Dataset: needs at least 1 store");
  if (customers.empty())
    throw std::invalid_argument("Dataset: needs at least 1 customer region");
  const int d = store_feature_dim();
  for (const Store& s : stores) {
    if (s.features.size() != d)
      throw std::invalid_argument("Dataset: store feature lengths differ (store " +
                                  s.id + ")");
    if (!s.features.allFinite() || !std::isfinite(s.revenue) ||
        !std::isfinite(s.location.x) || !std::isfinite(s.location.y))
      throw std::invalid_argument("Dataset: non-finite store field (store " + s.id + ")");
  }
  const int p = customer_feature_dim();
  for (const CustomerRegion& c : customers) {
    if (c.features.size() != p)
      throw std::invalid_argument(
          "Dataset: customer feature lengths differ (customer " + c.id + ")");
    if (!c.features.allFinite() || !std::isfinite(c.location.x) ||
        !std::isfinite(c.location.y))
      throw std::invalid_argument("Dataset: non-finite customer field (customer " +
                                  c.id + ")");
  }
  if (region) region->validate();
}

void ParameterVector::validate(const Dataset& data, const ModelConfig& config) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("ParameterVector: gamma must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("ParameterVector: alpha must be positive");
  if (beta.size() != data.customer_feature_dim())
    throw std::invalid_argument("ParameterVector: beta dimension mismatch");
  if (epsilon.size() != data.n_stores())
    throw std::invalid_argument("ParameterVector: epsilon dimension mismatch");
  if (config.attraction_mode == AttractionMode::kStoreSpecific) {
    if (lambda.size() != 0)
      throw std::invalid_argument(
          "ParameterVector: lambda must be empty in store-specific mode");
  } else if (lambda.size() != data.store_feature_dim()) {
    throw std::invalid_argument("ParameterVector: lambda dimension mismatch");
  }
  if (!beta.allFinite() || !lambda.allFinite() || !epsilon.allFinite())
    throw std::invalid_argument("ParameterVector: non-finite coefficient");
}

PriorSpec PriorSpec::weakly_informative(const Dataset& data, const ModelConfig& config) {
  PriorSpec p;
  p.mu_beta = Eigen::VectorXd::Zero(data.customer_feature_dim());
  p.mu_lambda = Eigen::VectorXd::Zero(
      config.attraction_mode == AttractionMode::kFeatureDriven
          ? data.store_feature_dim()
          : 0);
  p.mu_epsilon = Eigen::VectorXd::Zero(data.n_stores());
  return p;
}

void PriorSpec::validate() const {
  if (!(alpha_shape > 0.0) || !(alpha_rate > 0.0) || !(gamma_shape > 0.0) ||
      !(gamma_rate > 0.0) || !(var_lambda > 0.0) || !(var_epsilon > 0.0))
    throw std::invalid_argument("PriorSpec: shapes, rates and variances must be positive");
  if (!mu_beta.allFinite() || !mu_lambda.allFinite() || !mu_epsilon.allFinite())
    throw std::invalid_argument("PriorSpec: non-finite prior mean");
}

}  // namespace bsim
