#include "bsim/vi.hpp"

#include <chrono>
#include <cmath>
#include <deque>

#include "bsim/special_functions.hpp"

namespace bsim {

VariationalState VariationalState::initial(const PriorSpec& priors, double init_var) {
  VariationalState s;
  s.q_beta = GaussianDiag::isotropic(priors.mu_beta, init_var);
  s.q_lambda = GaussianDiag::isotropic(priors.mu_lambda, init_var);
  s.q_epsilon = GaussianDiag::isotropic(priors.mu_epsilon, init_var);
  s.q_alpha = GammaDist(priors.alpha_shape, priors.alpha_rate);
  s.q_gamma = GammaDist(priors.gamma_shape, priors.gamma_rate);
  return s;
}

Eigen::VectorXd VariationalState::to_unconstrained() const {
  const Eigen::Index p2 = q_beta.dim(), d2 = q_lambda.dim(), s = q_epsilon.dim();
  Eigen::VectorXd u(2 * (p2 + d2 + s) + 4);
  Eigen::Index k = 0;
  u.segment(k, p2) = q_beta.mean;
  k += p2;
  u.segment(k, p2) = q_beta.var.array().log();
  k += p2;
  u.segment(k, d2) = q_lambda.mean;
  k += d2;
  u.segment(k, d2) = q_lambda.var.array().log();
  k += d2;
  u.segment(k, s) = q_epsilon.mean;
  k += s;
  u.segment(k, s) = q_epsilon.var.array().log();
  k += s;
  u[k++] = std::log(q_alpha.shape);
  u[k++] = std::log(q_alpha.rate);
  u[k++] = std::log(q_gamma.shape);
  u[k++] = std::log(q_gamma.rate);
  return u;
}

VariationalState VariationalState::from_unconstrained(const Eigen::VectorXd& u,
                                                      int beta_dim, int lambda_dim,
                                                      int epsilon_dim) {
  const Eigen::Index want = 2 * (beta_dim + lambda_dim + epsilon_dim) + 4;
  if (u.size() != want)
    throw std::invalid_argument("VariationalState: unconstrained vector has wrong size");
  VariationalState s;
  Eigen::Index k = 0;
  s.q_beta = GaussianDiag(u.segment(k, beta_dim),
                          u.segment(k + beta_dim, beta_dim).array().exp());
  k += 2 * beta_dim;
  s.q_lambda = GaussianDiag(u.segment(k, lambda_dim),
                            u.segment(k + lambda_dim, lambda_dim).array().exp());
  k += 2 * lambda_dim;
  s.q_epsilon = GaussianDiag(u.segment(k, epsilon_dim),
                             u.segment(k + epsilon_dim, epsilon_dim).array().exp());
  k += 2 * epsilon_dim;
  s.q_alpha = GammaDist(std::exp(u[k]), std::exp(u[k + 1]));
  s.q_gamma = GammaDist(std::exp(u[k + 2]), std::exp(u[k + 3]));
  return s;
}

std::vector<std::string> VariationalState::coordinate_names(int beta_dim,
                                                            int lambda_dim,
                                                            int epsilon_dim) {
  std::vector<std::string> names;
  auto block = [&](const std::string& stem, int dim) {
    for (int i = 0; i < dim; ++i) names.push_back(stem + "[" + std::to_string(i) + "]");
  };
  block("mu_beta", beta_dim);
  block("log_var_beta", beta_dim);
  block("mu_lambda", lambda_dim);
  block("log_var_lambda", lambda_dim);
  block("mu_epsilon", epsilon_dim);
  block("log_var_epsilon", epsilon_dim);
  names.insert(names.end(), {"log_alpha_shape", "log_alpha_rate", "log_gamma_shape",
                             "log_gamma_rate"});
  return names;
}

void VIConfig::validate() const {
  if (mc_samples < 1) throw std::invalid_argument("VIConfig: mc_samples must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("VIConfig: max_iters must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("VIConfig: learning_rate must be positive");
  if (!(adam_betas.first > 0.0 && adam_betas.first < 1.0 && adam_betas.second > 0.0 &&
        adam_betas.second < 1.0))
    throw std::invalid_argument("VIConfig: adam_betas must lie in (0,1)");
  if (convergence_window < 1)
    throw std::invalid_argument("VIConfig: convergence_window must be >= 1");
  if (!(convergence_tol > 0.0))
    throw std::invalid_argument("VIConfig: convergence_tol must be positive");
}

namespace {

struct ElboTerms {
  double elbo = 0.0;
  double expected_residual = 0.0;  // E_q sum_s (y_s - yhat_s)^2, MC estimate
};

// Shared core for the estimate and its gradient; the draw sequence is
// identical in both modes so finite differences under a fixed seed probe a
// smooth deterministic function.
ElboTerms elbo_core(const ModelEvaluator& eval, const PriorSpec& priors,
                    const VariationalState& state, int mc_samples, RngStream& rng,
                    Eigen::VectorXd* grad) {
  const bool feature_driven =
      eval.config().attraction_mode == AttractionMode::kFeatureDriven;
  const int p2 = static_cast<int>(state.q_beta.dim());
  const int d2 = static_cast<int>(state.q_lambda.dim());
  const int s_dim = static_cast<int>(state.q_epsilon.dim());
  if (p2 != eval.customer_feature_dim() || s_dim != eval.n_stores() ||
      (feature_driven && d2 != eval.store_feature_dim()) ||
      (!feature_driven && d2 != 0))
    throw std::invalid_argument("elbo: variational state dimensions do not match data");
  priors.validate();

  const double s_count = static_cast<double>(eval.n_stores());
  const double w1 = state.q_alpha.shape, w2 = state.q_alpha.rate;
  const double r1 = state.q_gamma.shape, r2 = state.q_gamma.rate;
  const double e_gamma = r1 / r2;

  const Eigen::ArrayXd sd_beta = state.q_beta.var.array().sqrt();
  const Eigen::ArrayXd sd_lambda = state.q_lambda.var.array().sqrt();
  const Eigen::ArrayXd sd_eps = state.q_epsilon.var.array().sqrt();

  Eigen::VectorXd acc_mu_beta = Eigen::VectorXd::Zero(p2);
  Eigen::VectorXd acc_lv_beta = Eigen::VectorXd::Zero(p2);
  Eigen::VectorXd acc_mu_lambda = Eigen::VectorXd::Zero(d2);
  Eigen::VectorXd acc_lv_lambda = Eigen::VectorXd::Zero(d2);
  Eigen::VectorXd acc_mu_eps = Eigen::VectorXd::Zero(s_dim);
  Eigen::VectorXd acc_lv_eps = Eigen::VectorXd::Zero(s_dim);

  ForwardEval fe;
  ParameterVector params;
  params.gamma = 1.0;
  params.alpha = 1.0;
  Eigen::VectorXd zb(p2), zl(d2), ze(s_dim);

  double residual_sum = 0.0;
  for (int i = 0; i < mc_samples; ++i) {
    for (int k = 0; k < p2; ++k) zb[k] = rng.normal();
    for (int k = 0; k < d2; ++k) zl[k] = rng.normal();
    for (int k = 0; k < s_dim; ++k) ze[k] = rng.normal();
    params.beta = state.q_beta.mean.array() + sd_beta * zb.array();
    params.lambda = state.q_lambda.mean.array() + sd_lambda * zl.array();
    params.epsilon = state.q_epsilon.mean.array() + sd_eps * ze.array();

    eval.evaluate(params, fe);
    const Eigen::VectorXd resid = eval.revenues() - fe.yhat;
    residual_sum += resid.squaredNorm();

    if (grad) {
      const Eigen::VectorXd d_beta = -2.0 * (eval.design_matrix(fe).transpose() * resid);
      acc_mu_beta += d_beta;
      acc_lv_beta.array() += d_beta.array() * (0.5 * sd_beta * zb.array());
      const Eigen::VectorXd d_ups = eval.residual_grad_log_variance(fe, resid);
      if (feature_driven) {
        const Eigen::VectorXd d_lambda = eval.store_features().transpose() * d_ups;
        acc_mu_lambda += d_lambda;
        acc_lv_lambda.array() += d_lambda.array() * (0.5 * sd_lambda * zl.array());
      }
      acc_mu_eps += d_ups;
      acc_lv_eps.array() += d_ups.array() * (0.5 * sd_eps * ze.array());
    }
  }
  const double m = static_cast<double>(mc_samples);
  const double e_resid = residual_sum / m;

  // Expected log likelihood, with E[gamma] and E[ln gamma] pulled out of the
  // expectation analytically.
  const double l_ell = -0.5 * s_count * std::log(2.0 * M_PI) +
                       0.5 * s_count * (digamma(r1) - std::log(r2)) -
                       0.5 * e_gamma * e_resid;

  // KL block. The beta factor pairs with its hierarchical prior through
  // E_q[ln q(beta)] - E_q[ln p(beta | alpha)].
  const double c_beta = (state.q_beta.mean - priors.mu_beta).squaredNorm() +
                        state.q_beta.var.sum();
  const double e_log_q_beta = -0.5 * p2 * std::log(2.0 * M_PI) -
                              0.5 * state.q_beta.var.array().log().sum() - 0.5 * p2;
  const double e_log_p_beta = -0.5 * p2 * std::log(2.0 * M_PI) +
                              0.5 * p2 * (digamma(w1) - std::log(w2)) -
                              0.5 * (w1 / w2) * c_beta;
  const double kl_beta = e_log_q_beta - e_log_p_beta;
  const double kl_alpha =
      kl_gamma(state.q_alpha, GammaDist(priors.alpha_shape, priors.alpha_rate));
  const double kl_gamma_term =
      kl_gamma(state.q_gamma, GammaDist(priors.gamma_shape, priors.gamma_rate));
  const double kl_lambda =
      feature_driven
          ? kl_gaussian(state.q_lambda,
                        GaussianDiag::isotropic(priors.mu_lambda, priors.var_lambda))
          : 0.0;
  const double kl_eps = kl_gaussian(
      state.q_epsilon, GaussianDiag::isotropic(priors.mu_epsilon, priors.var_epsilon));

  const double l_kl = kl_beta + kl_alpha + kl_gamma_term + kl_lambda + kl_eps;

  ElboTerms out;
  out.expected_residual = e_resid;
  out.elbo = l_ell - l_kl;
  if (!std::isfinite(out.elbo)) {
    const char* term = !std::isfinite(l_ell) ? "expected log likelihood"
                                             : "KL divergence";
    throw std::runtime_error(std::string("elbo_estimate: non-finite ") + term);
  }

  if (grad) {
    const double factor = -0.5 * e_gamma / m;
    Eigen::VectorXd& g = *grad;
    g.resize(2 * (p2 + d2 + s_dim) + 4);
    Eigen::Index k = 0;
    // beta mean / log-variance
    g.segment(k, p2) = factor * acc_mu_beta -
                       (w1 / w2) * (state.q_beta.mean - priors.mu_beta);
    k += p2;
    g.segment(k, p2) = (factor * acc_lv_beta).array() + 0.5 -
                       state.q_beta.var.array() * (0.5 * w1 / w2);
    k += p2;
    // lambda
    g.segment(k, d2) = factor * acc_mu_lambda -
                       (state.q_lambda.mean - priors.mu_lambda) / priors.var_lambda;
    k += d2;
    g.segment(k, d2) = (factor * acc_lv_lambda).array() + 0.5 -
                       state.q_lambda.var.array() / (2.0 * priors.var_lambda);
    k += d2;
    // epsilon
    g.segment(k, s_dim) = factor * acc_mu_eps -
                          (state.q_epsilon.mean - priors.mu_epsilon) / priors.var_epsilon;
    k += s_dim;
    g.segment(k, s_dim) = (factor * acc_lv_eps).array() + 0.5 -
                          state.q_epsilon.var.array() / (2.0 * priors.var_epsilon);
    k += s_dim;
    // alpha shape/rate (log scale), analytic through kl_beta and kl_alpha
    const double dklb_dw1 = -0.5 * p2 * trigamma(w1) + c_beta / (2.0 * w2);
    const double dklb_dw2 = 0.5 * p2 / w2 - w1 * c_beta / (2.0 * w2 * w2);
    const double dkla_dw1 =
        (w1 - priors.alpha_shape) * trigamma(w1) + (priors.alpha_rate - w2) / w2;
    const double dkla_dw2 = priors.alpha_shape / w2 - w1 * priors.alpha_rate / (w2 * w2);
    g[k++] = w1 * (-dklb_dw1 - dkla_dw1);
    g[k++] = w2 * (-dklb_dw2 - dkla_dw2);
    // gamma shape/rate (log scale)
    const double dklg_dr1 =
        (r1 - priors.gamma_shape) * trigamma(r1) + (priors.gamma_rate - r2) / r2;
    const double dklg_dr2 = priors.gamma_shape / r2 - r1 * priors.gamma_rate / (r2 * r2);
    g[k++] = r1 * (0.5 * s_count * trigamma(r1) - e_resid / (2.0 * r2) - dklg_dr1);
    g[k++] = r2 * (-0.5 * s_count / r2 + r1 * e_resid / (2.0 * r2 * r2) - dklg_dr2);

    if (!g.allFinite()) {
      const auto names = VariationalState::coordinate_names(p2, d2, s_dim);
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i]))
          throw std::runtime_error("elbo_gradient: non-finite component " + names[i]);
      }
    }
  }
  return out;
}

}  // namespace

double elbo_estimate(const ModelEvaluator& eval, const PriorSpec& priors,
                     const VariationalState& state, int mc_samples, RngStream& rng) {
  return elbo_core(eval, priors, state, mc_samples, rng, nullptr).elbo;
}

double elbo_estimate(const Dataset& data, const ModelConfig& config,
                     const PriorSpec& priors, const VariationalState& state,
                     int mc_samples, RngStream& rng) {
  return elbo_estimate(ModelEvaluator(data, config), priors, state, mc_samples, rng);
}

Eigen::VectorXd elbo_gradient(const ModelEvaluator& eval, const PriorSpec& priors,
                              const VariationalState& state, int mc_samples,
                              RngStream& rng, double* elbo_value) {
  Eigen::VectorXd grad;
  const ElboTerms terms = elbo_core(eval, priors, state, mc_samples, rng, &grad);
  if (elbo_value) *elbo_value = terms.elbo;
  return grad;
}

Eigen::VectorXd elbo_gradient(const Dataset& data, const ModelConfig& config,
                              const PriorSpec& priors, const VariationalState& state,
                              int mc_samples, RngStream& rng, double* elbo_value) {
  return elbo_gradient(ModelEvaluator(data, config), priors, state, mc_samples, rng,
                       elbo_value);
}

FitResult fit_vi(const Dataset& data, const ModelConfig& config,
                 const PriorSpec& priors, const VIConfig& vi_config) {
  vi_config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ModelEvaluator eval(data, config);

  const int p2 = eval.customer_feature_dim();
  const int d2 = config.attraction_mode == AttractionMode::kFeatureDriven
                     ? eval.store_feature_dim()
                     : 0;
  const int s_dim = eval.n_stores();

  VariationalState state = VariationalState::initial(priors);
  if (vi_config.informed_init) {
    // same warm start as the sampler; a prior-mean start leaves the gamma
    // factor collapsed against a near-flat likelihood
    const WarmStart start = warm_start(eval, priors);
    state.q_beta.mean = start.params.beta;
    for (int k = 0; k < p2; ++k) {
      const double precision =
          start.params.gamma * start.design.col(k).squaredNorm() + 1.0;
      state.q_beta.var[k] = 1.0 / precision;
    }
    state.q_gamma = GammaDist(priors.gamma_shape + 0.5 * s_dim,
                              priors.gamma_rate + 0.5 * start.rss);
    state.q_lambda.var = state.q_lambda.var.cwiseMin(priors.var_lambda);
    state.q_epsilon.var = state.q_epsilon.var.cwiseMin(priors.var_epsilon);
  }
  Eigen::VectorXd u = state.to_unconstrained();
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(u.size());
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(u.size());
  const double b1 = vi_config.adam_betas.first, b2 = vi_config.adam_betas.second;
  const double eps_adam = 1e-8;
  const int window = vi_config.convergence_window;

  FitResult result;
  std::deque<Eigen::VectorXd> tail;
  bool converged = false;
  int t = 0;
  for (t = 1; t <= vi_config.max_iters; ++t) {
    RngStream iter_rng = RngStream::substream(vi_config.seed, static_cast<std::uint64_t>(t));
    double elbo = 0.0;
    Eigen::VectorXd grad;
    try {
      state = VariationalState::from_unconstrained(u, p2, d2, s_dim);
      grad = elbo_gradient(eval, priors, state, vi_config.mc_samples, iter_rng, &elbo);
    } catch (const std::exception& err) {
      throw VIDivergenceError(std::string("fit_vi: diverged at iteration ") +
                                  std::to_string(t) + ": " + err.what(),
                              result.elbo_trace);
    }
    result.elbo_trace.push_back(elbo);

    adam_m = b1 * adam_m + (1.0 - b1) * grad;
    adam_v = b2 * adam_v + (1.0 - b2) * grad.cwiseAbs2();
    const double mc = 1.0 - std::pow(b1, t);
    const double vc = 1.0 - std::pow(b2, t);
    const double lr =
        vi_config.lr_decay_iters > 0
            ? vi_config.learning_rate /
                  std::sqrt(1.0 + static_cast<double>(t) / vi_config.lr_decay_iters)
            : vi_config.learning_rate;
    u += lr * ((adam_m / mc).array() / ((adam_v / vc).array().sqrt() + eps_adam)).matrix();

    tail.push_back(u);
    if (static_cast<int>(tail.size()) > window) tail.pop_front();

    if (t >= 2 * window && t % window == 0) {
      const auto& tr = result.elbo_trace;
      double now = 0.0, prev = 0.0;
      for (int i = t - window; i < t; ++i) now += tr[i];
      for (int i = t - 2 * window; i < t - window; ++i) prev += tr[i];
      if ((now - prev) / window < vi_config.convergence_tol) {
        converged = true;
        break;
      }
    }
  }
  result.iterations_run = static_cast<int>(result.elbo_trace.size());
  result.converged = converged;

  if (vi_config.tail_average && !tail.empty()) {
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(u.size());
    for (const auto& v : tail) avg += v;
    u = avg / static_cast<double>(tail.size());
  }
  result.state = VariationalState::from_unconstrained(u, p2, d2, s_dim);
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

ParameterSummary gaussian_summary(const std::string& name, double mean, double var,
                                  double level) {
  const double sd = std::sqrt(var);
  const double z = standard_normal_quantile(0.5 + 0.5 * level);
  return {name, mean, sd, mean - z * sd, mean + z * sd};
}

ParameterSummary gamma_summary(const std::string& name, const GammaDist& d,
                               double level) {
  RngStream rng(0x5eedU);
  std::vector<double> draws(100000);
  for (double& x : draws) x = sample_gamma(d, rng);
  const double lo = empirical_quantile(draws, 0.5 - 0.5 * level);
  const double hi = empirical_quantile(draws, 0.5 + 0.5 * level);
  return {name, d.mean(), std::sqrt(d.variance()), lo, hi};
}

}  // namespace

std::vector<ParameterSummary> summarize(const VariationalState& state, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("summarize: level must lie in (0,1)");
  std::vector<ParameterSummary> out;
  for (Eigen::Index i = 0; i < state.q_beta.dim(); ++i)
    out.push_back(gaussian_summary("beta[" + std::to_string(i) + "]",
                                   state.q_beta.mean[i], state.q_beta.var[i], level));
  for (Eigen::Index i = 0; i < state.q_lambda.dim(); ++i)
    out.push_back(gaussian_summary("lambda[" + std::to_string(i) + "]",
                                   state.q_lambda.mean[i], state.q_lambda.var[i], level));
  for (Eigen::Index i = 0; i < state.q_epsilon.dim(); ++i)
    out.push_back(gaussian_summary("epsilon[" + std::to_string(i) + "]",
                                   state.q_epsilon.mean[i], state.q_epsilon.var[i],
                                   level));
  out.push_back(gamma_summary("alpha", state.q_alpha, level));
  out.push_back(gamma_summary("gamma", state.q_gamma, level));
  return out;
}

}  // namespace bsim
