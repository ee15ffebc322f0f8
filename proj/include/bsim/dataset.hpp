#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "bsim/geometry.hpp"

namespace bsim {

struct Store {
  std::string id;
  Point2 location;
  Eigen::VectorXd features;  // length D-2
  double revenue = 0.0;
};

struct CustomerRegion {
  std::string id;
  Point2 location;
  Eigen::VectorXd features;  // length P-2
};

// How a store's attraction variance is parameterized: a free per-store
// coefficient, or a linear function of store features plus a per-store
// residual.
enum class AttractionMode { kStoreSpecific, kFeatureDriven };

struct ModelConfig {
  double truncation_radius = 1.0;
  AttractionMode attraction_mode = AttractionMode::kFeatureDriven;

  void validate() const;
};

struct Dataset {
  std::vector<Store> stores;
  std::vector<CustomerRegion> customers;
  std::optional<Polygon> region;

  int n_stores() const { return static_cast<int>(stores.size()); }
  int n_customers() const { return static_cast<int>(customers.size()); }
  int store_feature_dim() const;
  int customer_feature_dim() const;

  Eigen::MatrixXd store_feature_matrix() const;     // S x (D-2)
  Eigen::MatrixXd customer_feature_matrix() const;  // N x (P-2)
  Eigen::VectorXd revenues() const;                 // S

  void validate() const;
};

// One complete model state: budget coefficients, attraction coefficients,
// per-store attraction residuals, likelihood precision gamma = 1/sigma^2 and
// the budget-prior precision alpha.
struct ParameterVector {
  Eigen::VectorXd beta;     // P-2
  Eigen::VectorXd lambda;   // D-2; empty in store-specific mode
  Eigen::VectorXd epsilon;  // S
  double gamma = 1.0;
  double alpha = 1.0;

  void validate(const Dataset& data, const ModelConfig& config) const;
};

struct PriorSpec {
  Eigen::VectorXd mu_beta;
  double alpha_shape = 1.0;  // shape-rate parameterization throughout
  double alpha_rate = 1.0;
  double gamma_shape = 1.0;
  double gamma_rate = 1.0;
  Eigen::VectorXd mu_lambda;
  double var_lambda = 1.0;
  Eigen::VectorXd mu_epsilon;
  double var_epsilon = 1.0;

  // Zero means, unit shapes/rates/variances, dimensioned for the dataset.
  static PriorSpec weakly_informative(const Dataset& data, const ModelConfig& config);

  void validate() const;
};

}  // namespace bsim
