#include "bsim/mcmc.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bsim/rng.hpp"
#include "bsim/special_functions.hpp"

namespace bsim {

void MCMCConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("MCMCConfig: iterations must be >= 1");
  if (warmup < 0 || warmup >= iterations)
    throw std::invalid_argument("MCMCConfig: warmup must be in [0, iterations)");
  if (thin < 1) throw std::invalid_argument("MCMCConfig: thin must be >= 1");
  if (init_step_sizes.size() < 1 || !(init_step_sizes.array() > 0.0).all())
    throw std::invalid_argument("MCMCConfig: init_step_sizes must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0) ||
      !(target_accept_pair > 0.0 && target_accept_pair < 1.0))
    throw std::invalid_argument("MCMCConfig: target accept rates must lie in (0,1)");
}

ParameterVector unpack_unconstrained(const Eigen::VectorXd& u, int beta_dim,
                                     int lambda_dim, int epsilon_dim) {
  if (u.size() != beta_dim + lambda_dim + epsilon_dim + 2)
    throw std::invalid_argument("unpack_unconstrained: wrong vector length");
  ParameterVector p;
  p.beta = u.segment(0, beta_dim);
  p.lambda = u.segment(beta_dim, lambda_dim);
  p.epsilon = u.segment(beta_dim + lambda_dim, epsilon_dim);
  p.gamma = std::exp(u[beta_dim + lambda_dim + epsilon_dim]);
  p.alpha = std::exp(u[beta_dim + lambda_dim + epsilon_dim + 1]);
  return p;
}

double log_posterior_unconstrained(const ModelEvaluator& eval, const PriorSpec& priors,
                                   const Eigen::VectorXd& u) {
  const int d2 = eval.config().attraction_mode == AttractionMode::kFeatureDriven
                     ? eval.store_feature_dim()
                     : 0;
  const ParameterVector params =
      unpack_unconstrained(u, eval.customer_feature_dim(), d2, eval.n_stores());
  // precision coordinates can overflow/underflow the exp transform
  if (!(params.gamma > 0.0) || !(params.alpha > 0.0) ||
      !std::isfinite(params.gamma) || !std::isfinite(params.alpha))
    return -std::numeric_limits<double>::infinity();
  const double log_jacobian = u[u.size() - 2] + u[u.size() - 1];
  try {
    return eval.log_joint(params, priors) + log_jacobian;
  } catch (const std::runtime_error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

double log_posterior_unconstrained(const Dataset& data, const ModelConfig& config,
                                   const PriorSpec& priors, const Eigen::VectorXd& u) {
  return log_posterior_unconstrained(ModelEvaluator(data, config), priors, u);
}

namespace {

// Warm-up state for one proposal block: Robbins-Monro scalar step plus a
// Haario-style covariance estimate of the block coordinates.
struct BlockAdaptation {
  double log_step = 0.0;
  long n_seen = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;          // sum of outer products of deviations
  Eigen::MatrixXd chol;        // frozen proposal shape (lower triangular)
  bool use_covariance = false;

  explicit BlockAdaptation(const SamplerBlock& block)
      : log_step(std::log(block.init_step)),
        mean(Eigen::VectorXd::Zero(block.size)),
        m2(Eigen::MatrixXd::Zero(block.size, block.size)),
        chol(Eigen::MatrixXd::Identity(block.size, block.size)) {}

  void observe(const Eigen::Ref<const Eigen::VectorXd>& x) {
    ++n_seen;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(n_seen);
    m2 += delta * (x - mean).transpose();
  }

  void refresh_shape() {
    const Eigen::Index d = mean.size();
    if (d < 2 || n_seen < std::max<long>(100, 10 * d)) return;
    Eigen::MatrixXd cov = m2 / static_cast<double>(n_seen - 1);
    cov.diagonal().array() += 1e-8 + 1e-6 * cov.diagonal().mean();
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
      chol = llt.matrixL();
      // keep the overall scale in the scalar step: normalize the shape
      const double scale = std::sqrt(cov.diagonal().mean());
      if (scale > 0.0) chol /= scale;
      use_covariance = true;
    }
  }
};

}  // namespace

Chain run_adaptive_rwm(const std::function<double(const Eigen::VectorXd&)>& target,
                       Eigen::VectorXd init, const std::vector<SamplerBlock>& blocks,
                       const MCMCConfig& config) {
  config.validate();
  if (blocks.empty()) throw std::invalid_argument("run_adaptive_rwm: no blocks");
  const auto t0 = std::chrono::steady_clock::now();

  RngStream rng(config.seed);
  Eigen::VectorXd u = std::move(init);
  double lp = target(u);
  if (!std::isfinite(lp))
    throw std::invalid_argument("run_adaptive_rwm: initial point has zero density");

  const std::size_t n_blocks = blocks.size();
  std::vector<BlockAdaptation> adapt;
  adapt.reserve(n_blocks);
  for (const SamplerBlock& block : blocks) adapt.emplace_back(block);

  std::vector<double> warm_accept(n_blocks, 0.0);
  int warm_tail = 0;  // proposals counted in the late-warm-up window
  std::vector<double> kept_accept(n_blocks, 0.0);

  const int n_kept = (config.iterations - config.warmup + config.thin - 1) / config.thin;
  Chain chain;
  chain.draws.resize(n_kept, u.size());
  Eigen::VectorXd proposal = u;

  int stored = 0;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    const bool warm = iter <= config.warmup;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const SamplerBlock& block = blocks[b];
      BlockAdaptation& state = adapt[b];
      const double step = std::exp(state.log_step);
      Eigen::VectorXd z(block.size);
      for (int j = 0; j < block.size; ++j) z[j] = rng.normal();
      proposal = u;
      if (state.use_covariance) {
        proposal.segment(block.offset, block.size) +=
            step * (state.chol * z);
      } else {
        proposal.segment(block.offset, block.size) += step * z;
      }
      const double lp_new = target(proposal);
      const double accept_prob =
          std::isfinite(lp_new) ? std::min(1.0, std::exp(std::min(0.0, lp_new - lp)))
                                : 0.0;
      if (rng.uniform() < accept_prob) {
        u = proposal;
        lp = lp_new;
      }
      if (warm) {
        // Robbins-Monro on the log step; shape re-estimated periodically;
        // everything frozen after warm-up to preserve detailed balance
        const double kappa = std::pow(static_cast<double>(iter), -0.6);
        state.log_step += kappa * (accept_prob - block.target_accept);
        state.observe(u.segment(block.offset, block.size));
        if (iter % 100 == 0) state.refresh_shape();
        if (iter > 3 * config.warmup / 4) {
          warm_accept[b] += accept_prob;
          if (b == 0) ++warm_tail;
        }
      } else {
        kept_accept[b] += accept_prob;
      }
    }
    if (warm && iter == config.warmup && warm_tail > 0) {
      for (std::size_t b = 0; b < n_blocks; ++b) {
        if (warm_accept[b] / warm_tail < 0.01)
          throw std::runtime_error(
              "run_adaptive_rwm: block " + std::to_string(b) +
              " rejects nearly everything after adaptation; use smaller "
              "init_step_sizes");
      }
    }
    if (!warm && (iter - config.warmup - 1) % config.thin == 0) {
      chain.draws.row(stored++) = u.transpose();
    }
  }
  chain.draws.conservativeResize(stored, Eigen::NoChange);

  const double denom = static_cast<double>(config.iterations - config.warmup);
  chain.accept_rate.resize(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) chain.accept_rate[b] = kept_accept[b] / denom;
  chain.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return chain;
}

Chain run_chain(const Dataset& data, const ModelConfig& config, const PriorSpec& priors,
                const MCMCConfig& mcmc_config) {
  mcmc_config.validate();
  priors.validate();
  const ModelEvaluator eval(data, config);
  const int p2 = eval.customer_feature_dim();
  const int d2 = config.attraction_mode == AttractionMode::kFeatureDriven
                     ? eval.store_feature_dim()
                     : 0;
  const int s_dim = eval.n_stores();

  // a cold start at the prior mean makes the warm-up crawl through a
  // near-flat likelihood, so start from the shared deterministic warm start
  const WarmStart start = warm_start(eval, priors);
  Eigen::VectorXd init(p2 + d2 + s_dim + 2);
  init.segment(0, p2) = start.params.beta;
  init.segment(p2, d2) = start.params.lambda;
  init.segment(p2 + d2, s_dim) = start.params.epsilon;
  init[p2 + d2 + s_dim] = std::log(start.params.gamma);
  init[p2 + d2 + s_dim + 1] = std::log(start.params.alpha);

  // one covariance-adapted block for the coefficients (the posterior couples
  // beta, lambda and epsilon strongly; independent blocks mix an order of
  // magnitude slower) plus the 2-dim precision block
  std::vector<SamplerBlock> blocks;
  blocks.push_back({0, p2 + d2 + s_dim, mcmc_config.target_accept,
                    mcmc_config.init_step_sizes[0]});
  blocks.push_back({p2 + d2 + s_dim, 2, mcmc_config.target_accept_pair,
                    mcmc_config.init_step_sizes.size() > 1
                        ? mcmc_config.init_step_sizes[1]
                        : mcmc_config.init_step_sizes[0]});

  const auto target = [&](const Eigen::VectorXd& u) {
    return log_posterior_unconstrained(eval, priors, u);
  };
  Chain chain = run_adaptive_rwm(target, init, blocks, mcmc_config);

  // back-transform the precision coordinates to the constrained scale
  chain.draws.col(p2 + d2 + s_dim) = chain.draws.col(p2 + d2 + s_dim).array().exp();
  chain.draws.col(p2 + d2 + s_dim + 1) =
      chain.draws.col(p2 + d2 + s_dim + 1).array().exp();

  for (int i = 0; i < p2; ++i) chain.names.push_back("beta[" + std::to_string(i) + "]");
  for (int i = 0; i < d2; ++i) chain.names.push_back("lambda[" + std::to_string(i) + "]");
  for (int i = 0; i < s_dim; ++i)
    chain.names.push_back("epsilon[" + std::to_string(i) + "]");
  chain.names.push_back("gamma");
  chain.names.push_back("alpha");
  return chain;
}

double effective_sample_size(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return static_cast<double>(n);
  const double mean = x.mean();
  const Eigen::ArrayXd centered = x.array() - mean;
  const double gamma0 = centered.square().sum() / n;
  if (gamma0 == 0.0) return static_cast<double>(n);  // constant chain

  auto autocov = [&](Eigen::Index lag) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i + lag < n; ++i) acc += centered[i] * centered[i + lag];
    return acc / n;
  };

  // Geyer initial monotone sequence: sum pair gammas while positive and
  // nonincreasing.
  double tau_sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocov(2 * m) + autocov(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau_sum += pair;
    prev_pair = pair;
  }
  const double tau = std::max(2.0 * tau_sum / gamma0 - 1.0, 1e-12);
  return static_cast<double>(n) / tau;
}

std::vector<ChainParamSummary> chain_summary(const Chain& chain, double level) {
  if (chain.draws.rows() == 0)
    throw std::invalid_argument("chain_summary: empty chain");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("chain_summary: level must lie in (0,1)");
  const double q_lo = 0.5 - 0.5 * level, q_hi = 0.5 + 0.5 * level;
  std::vector<ChainParamSummary> out;
  for (Eigen::Index k = 0; k < chain.draws.cols(); ++k) {
    const Eigen::VectorXd col = chain.draws.col(k);
    ChainParamSummary s;
    s.name = k < static_cast<Eigen::Index>(chain.names.size())
                 ? chain.names[static_cast<std::size_t>(k)]
                 : "param[" + std::to_string(k) + "]";
    s.mean = col.mean();
    s.stddev = std::sqrt((col.array() - s.mean).square().sum() /
                         std::max<Eigen::Index>(col.size() - 1, 1));
    std::vector<double> values(col.data(), col.data() + col.size());
    s.ci_lo = col.size() > 1 ? empirical_quantile(values, q_lo) : col[0];
    s.ci_hi = col.size() > 1 ? empirical_quantile(values, q_hi) : col[0];
    s.ess = effective_sample_size(col);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bsim
