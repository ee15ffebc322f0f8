#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <utility>

#include "bsim/dataset.hpp"

namespace bsim {

// Per-store truncated-Gaussian attraction field.
struct AttractionFieldEntry {
  Point2 center;
  double variance = 1.0;
  double truncation_radius = 1.0;
};
using AttractionField = std::vector<AttractionFieldEntry>;

// sigma_s^2 = exp(eps_s) in store-specific mode, exp(lambda . phi_s + eps_s)
// in feature-driven mode.
double attraction_variance(const ModelConfig& config,
                           const Eigen::VectorXd& store_features,
                           const Eigen::VectorXd& lambda, double eps_s);

// Density of the isotropic Gaussian truncated at the field's radius,
// evaluated at `point`; zero beyond the radius.
double truncated_gaussian_pdf(const AttractionFieldEntry& field, const Point2& point);

AttractionField attraction_field(const Dataset& data, const ModelConfig& config,
                                 const ParameterVector& params);

// r_n = beta . v_n
double customer_budget(const CustomerRegion& customer, const Eigen::VectorXd& beta);

// One forward-model evaluation. Rows of `probs` for customers outside every
// store's truncation radius are all-zero; such customers contribute no
// revenue.
struct ForwardEval {
  Eigen::VectorXd sigma2;    // S
  Eigen::MatrixXd probs;     // N x S, rows sum to 1 (or 0)
  Eigen::MatrixXd exponent;  // N x S, d^2/(2 sigma_s^2) on in-radius pairs
  Eigen::VectorXd trunc_term;  // S, see residual_grad_log_variance
  Eigen::VectorXd budgets;   // N
  Eigen::VectorXd yhat;      // S
  int n_outside = 0;
};

// Precomputes the distance structure of a dataset once so that repeated
// evaluations at new parameters only pay for the parameter-dependent parts.
class ModelEvaluator {
 public:
  ModelEvaluator(const Dataset& data, const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  int n_stores() const { return S_; }
  int n_customers() const { return N_; }
  int store_feature_dim() const { return static_cast<int>(phi_.cols()); }
  int customer_feature_dim() const { return static_cast<int>(v_.cols()); }
  const Eigen::MatrixXd& customer_features() const { return v_; }
  const Eigen::MatrixXd& store_features() const { return phi_; }
  const Eigen::VectorXd& revenues() const { return y_; }
  const Eigen::MatrixXd& squared_distances() const { return d2_; }

  Eigen::VectorXd attraction_variances(const ParameterVector& params) const;

  void evaluate(const ParameterVector& params, ForwardEval& out) const;

  Eigen::MatrixXd visit_probabilities(const ParameterVector& params) const;
  Eigen::VectorXd predict_revenues(const ParameterVector& params) const;
  Eigen::MatrixXd expenditure_flows(const ParameterVector& params) const;

  double log_joint(const ParameterVector& params, const PriorSpec& priors) const;

  // d yhat / d beta for fixed probabilities: S x (P-2) matrix P^T V.
  Eigen::MatrixXd design_matrix(const ForwardEval& eval) const;

  // Gradient of sum_s residual_s^2 with respect to upsilon_s = ln sigma_s^2,
  // holding budgets fixed. `residuals` is y - yhat.
  Eigen::VectorXd residual_grad_log_variance(const ForwardEval& eval,
                                             const Eigen::VectorXd& residuals) const;

 private:
  ModelConfig config_;
  int N_ = 0, S_ = 0;
  Eigen::MatrixXd d2_;      // N x S squared distances
  Eigen::MatrixXd inside_;  // N x S, 1.0 where d <= d_T
  Eigen::MatrixXd v_;       // N x (P-2)
  Eigen::MatrixXd phi_;     // S x (D-2)
  Eigen::VectorXd y_;       // S
};

Eigen::MatrixXd visit_probabilities(const Dataset& data, const ModelConfig& config,
                                    const ParameterVector& params);
Eigen::VectorXd predict_revenues(const Dataset& data, const ModelConfig& config,
                                 const ParameterVector& params);
double log_joint(const Dataset& data, const ModelConfig& config,
                 const ParameterVector& params, const PriorSpec& priors);

// Deterministic warm start shared by the inference engines: lambda and
// epsilon at their prior means, beta from a ridge solve at those attraction
// parameters, gamma from the implied residuals, alpha at its prior mean.
struct WarmStart {
  ParameterVector params;
  double rss = 0.0;
  Eigen::MatrixXd design;  // S x (P-2) at the starting attraction parameters
};
WarmStart warm_start(const ModelEvaluator& eval, const PriorSpec& priors);

struct EdgeCorrectionConfig {
  double eta_factor = 0.25;  // eta = truncation_radius * eta_factor
  int n_samples = 100000;
  std::uint64_t seed = 0;
};

struct PreprocessOptions {
  std::optional<EdgeCorrectionConfig> edge;  // requires dataset.region
  bool log_revenue = false;
  bool standardize_features = true;
};

struct PreprocessReport {
  Eigen::VectorXd store_feature_mean, store_feature_std;
  Eigen::VectorXd customer_feature_mean, customer_feature_std;
  Eigen::VectorXd area_fractions;  // per store; empty when edge is off
  bool log_revenue = false;
  bool standardized = false;
};

// Edge-corrects revenues, optionally log-transforms them, and z-scores the
// feature columns, in that order.
std::pair<Dataset, PreprocessReport> preprocess(const Dataset& data,
                                                const ModelConfig& config,
                                                const PreprocessOptions& options);

}  // namespace bsim
