#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bsim/distributions.hpp"
#include "bsim/model.hpp"
#include "bsim/rng.hpp"

namespace bsim {

// Mean-field variational state: Gaussians for beta, lambda and epsilon
// (diagonal covariances), Gammas for alpha and gamma.
struct VariationalState {
  GaussianDiag q_beta;
  GammaDist q_alpha;
  GammaDist q_gamma;
  GaussianDiag q_lambda;
  GaussianDiag q_epsilon;

  // Means at the prior means, Gaussian variances at init_var, Gamma factors
  // at the prior shape/rate.
  static VariationalState initial(const PriorSpec& priors, double init_var = 0.1);

  // Unconstrained packing: [mu_beta, ln var_beta, mu_lambda, ln var_lambda,
  // mu_epsilon, ln var_epsilon, ln alpha shape/rate, ln gamma shape/rate].
  Eigen::VectorXd to_unconstrained() const;
  static VariationalState from_unconstrained(const Eigen::VectorXd& u, int beta_dim,
                                             int lambda_dim, int epsilon_dim);
  static std::vector<std::string> coordinate_names(int beta_dim, int lambda_dim,
                                                   int epsilon_dim);
};

struct VIConfig {
  int mc_samples = 8;
  int max_iters = 5000;
  double learning_rate = 0.02;
  // step size decays as lr / sqrt(1 + t / lr_decay_iters); 0 disables decay
  int lr_decay_iters = 400;
  std::pair<double, double> adam_betas = {0.9, 0.999};
  int convergence_window = 100;
  double convergence_tol = 0.02;
  std::uint64_t seed = 0;
  // Average the unconstrained coordinates over the final window to damp the
  // stationary oscillation of a constant-step-size optimizer.
  bool tail_average = true;
  // Start from a ridge-regression warm start instead of the prior means.
  bool informed_init = true;

  void validate() const;
};

struct FitResult {
  VariationalState state;
  std::vector<double> elbo_trace;
  double wall_time = 0.0;  // seconds
  int iterations_run = 0;
  bool converged = false;
};

// Thrown when the ELBO diverges; carries the trace for post-mortems.
struct VIDivergenceError : std::runtime_error {
  VIDivergenceError(const std::string& what, std::vector<double> trace_)
      : std::runtime_error(what), trace(std::move(trace_)) {}
  std::vector<double> trace;
};

// Monte-Carlo ELBO with reparameterized (beta, lambda, epsilon) draws and the
// Gamma factors integrated analytically. Deterministic given the rng state.
double elbo_estimate(const ModelEvaluator& eval, const PriorSpec& priors,
                     const VariationalState& state, int mc_samples, RngStream& rng);
double elbo_estimate(const Dataset& data, const ModelConfig& config,
                     const PriorSpec& priors, const VariationalState& state,
                     int mc_samples, RngStream& rng);

// Gradient of elbo_estimate over the unconstrained coordinates, using the
// same draws (common random numbers) as the estimate itself.
Eigen::VectorXd elbo_gradient(const ModelEvaluator& eval, const PriorSpec& priors,
                              const VariationalState& state, int mc_samples,
                              RngStream& rng, double* elbo_value = nullptr);
Eigen::VectorXd elbo_gradient(const Dataset& data, const ModelConfig& config,
                              const PriorSpec& priors, const VariationalState& state,
                              int mc_samples, RngStream& rng,
                              double* elbo_value = nullptr);

FitResult fit_vi(const Dataset& data, const ModelConfig& config,
                 const PriorSpec& priors, const VIConfig& vi_config);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Per-parameter posterior mean, standard deviation and central credible
// interval at the given level. Gaussian factors are summarized analytically;
// Gamma factors by 1e5 seeded draws and empirical quantiles.
std::vector<ParameterSummary> summarize(const VariationalState& state, double level);

}  // namespace bsim
