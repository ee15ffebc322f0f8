#include "bsim/model.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bsim/distributions.hpp"

namespace bsim {

double attraction_variance(const ModelConfig& config,
                           const Eigen::VectorXd& store_features,
                           const Eigen::VectorXd& lambda, double eps_s) {
  if (config.attraction_mode == AttractionMode::kStoreSpecific) {
    return std::exp(eps_s);
  }
  if (lambda.size() != store_features.size())
    throw std::invalid_argument("attraction_variance: lambda/feature dimension mismatch");
  return std::exp(lambda.dot(store_features) + eps_s);
}

double truncated_gaussian_pdf(const AttractionFieldEntry& field, const Point2& point) {
  const double d = euclidean_distance(field.center, point);
  if (d > field.truncation_radius) return 0.0;
  const double s2 = field.variance;
  const double trunc_mass = -std::expm1(-field.truncation_radius *
                                        field.truncation_radius / (2.0 * s2));
  return std::exp(-d * d / (2.0 * s2)) / (2.0 * M_PI * s2 * trunc_mass);
}

AttractionField attraction_field(const Dataset& data, const ModelConfig& config,
                                 const ParameterVector& params) {
  params.validate(data, config);
  AttractionField field;
  field.reserve(data.stores.size());
  for (int s = 0; s < data.n_stores(); ++s) {
    const double var = attraction_variance(config, data.stores[s].features,
                                           params.lambda, params.epsilon[s]);
    field.push_back({data.stores[s].location, var, config.truncation_radius});
  }
  return field;
}

double customer_budget(const CustomerRegion& customer, const Eigen::VectorXd& beta) {
  if (beta.size() != customer.features.size())
    throw std::invalid_argument("customer_budget: beta/feature dimension mismatch");
  return beta.dot(customer.features);
}

ModelEvaluator::ModelEvaluator(const Dataset& data, const ModelConfig& config)
    : config_(config) {
  data.validate();
  config.validate();
  N_ = data.n_customers();
  S_ = data.n_stores();
  d2_.resize(N_, S_);
  for (int n = 0; n < N_; ++n) {
    for (int s = 0; s < S_; ++s) {
      const double dx = data.customers[n].location.x - data.stores[s].location.x;
      const double dy = data.customers[n].location.y - data.stores[s].location.y;
      d2_(n, s) = dx * dx + dy * dy;
    }
  }
  const double r2 = config.truncation_radius * config.truncation_radius;
  inside_ = (d2_.array() <= r2).cast<double>();
  v_ = data.customer_feature_matrix();
  phi_ = data.store_feature_matrix();
  y_ = data.revenues();
}

Eigen::VectorXd ModelEvaluator::attraction_variances(const ParameterVector& params) const {
  if (config_.attraction_mode == AttractionMode::kStoreSpecific)
    return params.epsilon.array().exp();
  return (phi_ * params.lambda + params.epsilon).array().exp();
}

void ModelEvaluator::evaluate(const ParameterVector& params, ForwardEval& out) const {
  out.sigma2 = attraction_variances(params);

  const double dt2 = config_.truncation_radius * config_.truncation_radius;
  const Eigen::ArrayXd inv2s = 0.5 / out.sigma2.array();
  // x_s = d_T^2 / (2 sigma_s^2); truncated mass is 1 - e^{-x}
  const Eigen::ArrayXd x = dt2 * inv2s;
  Eigen::ArrayXd log_norm(S_);
  out.trunc_term.resize(S_);
  for (int s = 0; s < S_; ++s) {
    const double xs = x[s];
    const double one_minus_g = -std::expm1(-xs);
    log_norm[s] = -std::log(2.0 * M_PI * out.sigma2[s] * one_minus_g);
    // B_s = -1 + x_s g_s / (1 - g_s), used by the chain rule through sigma^2
    out.trunc_term[s] = -1.0 + xs * std::exp(-xs) / one_minus_g;
  }

  out.exponent = d2_.array().rowwise() * inv2s.transpose();
  // log field value where in radius; -inf elsewhere
  Eigen::MatrixXd logz =
      ((-out.exponent).array().rowwise() + log_norm.transpose()).matrix();

  out.probs.resize(N_, S_);
  out.n_outside = 0;
  for (int n = 0; n < N_; ++n) {
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < S_; ++s) {
      if (inside_(n, s) != 0.0 && logz(n, s) > best) best = logz(n, s);
    }
    if (!std::isfinite(best)) {
      out.probs.row(n).setZero();
      ++out.n_outside;
      continue;
    }
    double total = 0.0;
    for (int s = 0; s < S_; ++s) {
      const double w = inside_(n, s) != 0.0 ? std::exp(logz(n, s) - best) : 0.0;
      out.probs(n, s) = w;
      total += w;
    }
    out.probs.row(n) /= total;
  }

  out.budgets = v_ * params.beta;
  out.yhat = out.probs.transpose() * out.budgets;
}

Eigen::MatrixXd ModelEvaluator::visit_probabilities(const ParameterVector& params) const {
  ForwardEval eval;
  evaluate(params, eval);
  return eval.probs;
}

Eigen::VectorXd ModelEvaluator::predict_revenues(const ParameterVector& params) const {
  ForwardEval eval;
  evaluate(params, eval);
  return eval.yhat;
}

Eigen::MatrixXd ModelEvaluator::expenditure_flows(const ParameterVector& params) const {
  ForwardEval eval;
  evaluate(params, eval);
  return eval.probs.array().colwise() * eval.budgets.array();
}

double ModelEvaluator::log_joint(const ParameterVector& params,
                                 const PriorSpec& priors) const {
  priors.validate();
  ForwardEval eval;
  evaluate(params, eval);

  const auto check = [](double value, const char* term) {
    if (!std::isfinite(value))
      throw std::runtime_error(std::string("log_joint: non-finite term: ") + term);
    return value;
  };

  const GaussianDiag likelihood(eval.yhat,
                                Eigen::VectorXd::Constant(S_, 1.0 / params.gamma));
  double total = check(gaussian_logpdf(likelihood, y_), "likelihood");
  total += check(
      gaussian_logpdf(GaussianDiag::isotropic(priors.mu_beta, 1.0 / params.alpha),
                      params.beta),
      "beta prior");
  total += check(gamma_logpdf(GammaDist(priors.alpha_shape, priors.alpha_rate),
                              params.alpha),
                 "alpha prior");
  total += check(gamma_logpdf(GammaDist(priors.gamma_shape, priors.gamma_rate),
                              params.gamma),
                 "gamma prior");
  if (config_.attraction_mode == AttractionMode::kFeatureDriven) {
    total += check(
        gaussian_logpdf(GaussianDiag::isotropic(priors.mu_lambda, priors.var_lambda),
                        params.lambda),
        "lambda prior");
  }
  total += check(
      gaussian_logpdf(GaussianDiag::isotropic(priors.mu_epsilon, priors.var_epsilon),
                      params.epsilon),
      "epsilon prior");
  return total;
}

Eigen::MatrixXd ModelEvaluator::design_matrix(const ForwardEval& eval) const {
  return eval.probs.transpose() * v_;
}

Eigen::VectorXd ModelEvaluator::residual_grad_log_variance(
    const ForwardEval& eval, const Eigen::VectorXd& residuals) const {
  // d/d upsilon_t of sum_s (y_s - yhat_s)^2
  //   = -2 sum_n r_n p_nt A_nt (e_t - ebar_n),
  // with A_nt = exponent_nt + B_t and ebar_n = sum_s p_ns e_s.
  const Eigen::MatrixXd w =
      eval.probs.array() *
      (eval.exponent.array().rowwise() + eval.trunc_term.transpose().array());
  const Eigen::VectorXd ebar = eval.probs * residuals;
  const Eigen::VectorXd wr = w.transpose() * eval.budgets;                    // S
  const Eigen::VectorXd wre = w.transpose() * (eval.budgets.array() * ebar.array()).matrix();
  return -2.0 * (residuals.array() * wr.array() - wre.array());
}

Eigen::MatrixXd visit_probabilities(const Dataset& data, const ModelConfig& config,
                                    const ParameterVector& params) {
  params.validate(data, config);
  return ModelEvaluator(data, config).visit_probabilities(params);
}

Eigen::VectorXd predict_revenues(const Dataset& data, const ModelConfig& config,
                                 const ParameterVector& params) {
  params.validate(data, config);
  return ModelEvaluator(data, config).predict_revenues(params);
}

double log_joint(const Dataset& data, const ModelConfig& config,
                 const ParameterVector& params, const PriorSpec& priors) {
  params.validate(data, config);
  return ModelEvaluator(data, config).log_joint(params, priors);
}

WarmStart warm_start(const ModelEvaluator& eval, const PriorSpec& priors) {
  const int p2 = eval.customer_feature_dim();
  WarmStart start;
  start.params.beta = Eigen::VectorXd::Zero(p2);
  start.params.lambda = priors.mu_lambda;
  start.params.epsilon = priors.mu_epsilon;
  start.params.alpha = priors.alpha_shape / priors.alpha_rate;

  ForwardEval fe;
  eval.evaluate(start.params, fe);
  start.design = eval.design_matrix(fe);
  const Eigen::MatrixXd ridge = start.design.transpose() * start.design +
                                0.1 * Eigen::MatrixXd::Identity(p2, p2);
  start.params.beta = ridge.ldlt().solve(start.design.transpose() * eval.revenues());
  start.rss = (eval.revenues() - start.design * start.params.beta).squaredNorm();
  start.params.gamma =
      std::clamp((priors.gamma_shape + 0.5 * eval.n_stores()) /
                     (priors.gamma_rate + 0.5 * start.rss),
                 1e-6, 1e6);
  return start;
}

namespace {

void standardize_columns(std::vector<Eigen::VectorXd*> columns_by_row, int dim,
                         const char* what, Eigen::VectorXd& mean_out,
                         Eigen::VectorXd& std_out) {
  const double n = static_cast<double>(columns_by_row.size());
  mean_out = Eigen::VectorXd::Zero(dim);
  std_out = Eigen::VectorXd::Zero(dim);
  for (const auto* row : columns_by_row) mean_out += *row;
  mean_out /= n;
  for (const auto* row : columns_by_row)
    std_out += (*row - mean_out).cwiseAbs2();
  std_out = (std_out / n).cwiseSqrt();
  for (int k = 0; k < dim; ++k) {
    if (std_out[k] == 0.0)
      throw std::invalid_argument(std::string("preprocess: zero-variance ") + what +
                                  " feature column f" + std::to_string(k + 1));
  }
  for (auto* row : columns_by_row)
    *row = ((*row - mean_out).array() / std_out.array()).matrix();
}

}  // namespace

std::pair<Dataset, PreprocessReport> preprocess(const Dataset& data,
                                                const ModelConfig& config,
                                                const PreprocessOptions& options) {
  data.validate();
  config.validate();
  Dataset out = data;
  PreprocessReport report;

  if (options.edge) {
    if (!out.region)
      throw std::invalid_argument("preprocess: edge correction requires a study region");
    const double eta = config.truncation_radius * options.edge->eta_factor;
    report.area_fractions.resize(out.n_stores());
    for (int s = 0; s < out.n_stores(); ++s) {
      const double frac = area_fraction(out.stores[s].location, eta, *out.region,
                                        options.edge->n_samples,
                                        options.edge->seed + static_cast<std::uint64_t>(s));
      report.area_fractions[s] = frac;
      out.stores[s].revenue *= frac;
    }
  }

  if (options.log_revenue) {
    for (Store& s : out.stores) {
      if (!(s.revenue > 0.0))
        throw std::invalid_argument("preprocess: nonpositive revenue for store " + s.id +
                                    " cannot be log-transformed");
      s.revenue = std::log(s.revenue);
    }
    report.log_revenue = true;
  }

  if (options.standardize_features) {
    if (data.store_feature_dim() > 0) {
      std::vector<Eigen::VectorXd*> rows;
      for (Store& s : out.stores) rows.push_back(&s.features);
      standardize_columns(rows, data.store_feature_dim(), "store",
                          report.store_feature_mean, report.store_feature_std);
    }
    if (data.customer_feature_dim() > 0) {
      std::vector<Eigen::VectorXd*> rows;
      for (CustomerRegion& c : out.customers) rows.push_back(&c.features);
      standardize_columns(rows, data.customer_feature_dim(), "customer",
                          report.customer_feature_mean, report.customer_feature_std);
    }
    report.standardized = true;
  }

  return {std::move(out), std::move(report)};
}

}  // namespace bsim
