#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bsim/model.hpp"

namespace bsim {

struct MCMCConfig {
  int iterations = 12000;
  int warmup = 6000;
  int thin = 2;
  // One entry per block; a single entry is broadcast to every block.
  Eigen::VectorXd init_step_sizes = Eigen::VectorXd::Constant(1, 0.1);
  double target_accept = 0.25;       // coefficient block
  double target_accept_pair = 0.44;  // the 2-dim (ln gamma, ln alpha) block
  std::uint64_t seed = 0;

  void validate() const;
};

struct Chain {
  Eigen::MatrixXd draws;  // T x K, post-warm-up and thinned, constrained scale
  std::vector<std::string> names;
  std::vector<double> accept_rate;  // per block, post-warm-up
  double wall_time = 0.0;
};

// Unnormalized log posterior over u = (beta, lambda, epsilon, ln gamma,
// ln alpha), including the log Jacobian of the two exp transforms. Non-finite
// values come back as -infinity (auto-reject).
double log_posterior_unconstrained(const ModelEvaluator& eval, const PriorSpec& priors,
                                   const Eigen::VectorXd& u);
double log_posterior_unconstrained(const Dataset& data, const ModelConfig& config,
                                   const PriorSpec& priors, const Eigen::VectorXd& u);

ParameterVector unpack_unconstrained(const Eigen::VectorXd& u, int beta_dim,
                                     int lambda_dim, int epsilon_dim);

struct SamplerBlock {
  int offset = 0;
  int size = 0;
  double target_accept = 0.25;
  double init_step = 0.1;
};

// Blockwise random-walk Metropolis with Robbins-Monro step-size adaptation
// during warm-up only; adaptation is frozen afterwards. Draws are stored on
// the unconstrained scale of `target`.
Chain run_adaptive_rwm(const std::function<double(const Eigen::VectorXd&)>& target,
                       Eigen::VectorXd init, const std::vector<SamplerBlock>& blocks,
                       const MCMCConfig& config);

// Samples the model posterior; blocks are beta | lambda | epsilon |
// (ln gamma, ln alpha). Stored draws are back-transformed to the constrained
// scale.
Chain run_chain(const Dataset& data, const ModelConfig& config, const PriorSpec& priors,
                const MCMCConfig& mcmc_config);

struct ChainParamSummary {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double ess = 0.0;
};

// Empirical moments, quantile CIs and effective sample size (initial
// monotone sequence estimator) per column.
std::vector<ChainParamSummary> chain_summary(const Chain& chain, double level);

double effective_sample_size(const Eigen::VectorXd& x);

}  // namespace bsim
