#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "bsim/mcmc.hpp"
#include "bsim/special_functions.hpp"
#include "bsim/vi.hpp"
#include "oracles.hpp"

using namespace bsim;
using bsim_test::conjugate_posterior_mean;
using bsim_test::conjugate_toy;
using bsim_test::gradient_instance;
using bsim_test::vec;

namespace {

VariationalState random_state(int p2, int d2, int s, RngStream& rng) {
  auto rand_vec = [&](int dim, double lo, double hi) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.uniform(lo, hi);
    return v;
  };
  VariationalState state;
  state.q_beta = GaussianDiag(rand_vec(p2, -1, 1), rand_vec(p2, 0.02, 0.8));
  state.q_lambda = GaussianDiag(rand_vec(d2, -1, 1), rand_vec(d2, 0.02, 0.8));
  state.q_epsilon = GaussianDiag(rand_vec(s, -1, 1), rand_vec(s, 0.02, 0.8));
  state.q_alpha = GammaDist(rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0));
  state.q_gamma = GammaDist(rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0));
  return state;
}

// central finite differences of elbo_estimate under common random numbers
Eigen::VectorXd fd_gradient(const ModelEvaluator& eval, const PriorSpec& priors,
                            const VariationalState& state, int mc_samples,
                            std::uint64_t seed, int p2, int d2, int s) {
  const Eigen::VectorXd u = state.to_unconstrained();
  Eigen::VectorXd grad(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(u[i]));
    Eigen::VectorXd up = u, down = u;
    up[i] += h;
    down[i] -= h;
    RngStream rng_up(seed), rng_down(seed);
    const double f_up = elbo_estimate(
        eval, priors, VariationalState::from_unconstrained(up, p2, d2, s), mc_samples,
        rng_up);
    const double f_down = elbo_estimate(
        eval, priors, VariationalState::from_unconstrained(down, p2, d2, s), mc_samples,
        rng_down);
    grad[i] = (f_up - f_down) / (2.0 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("elbo closed form on a zero-residual instance") {
  // zero features make every budget zero, so yhat = 0 = y and the Monte Carlo
  // residual vanishes identically
  Dataset d;
  d.stores = {Store{"s1", {0.0, 0.0}, Eigen::VectorXd(0), 0.0}};
  d.customers = {CustomerRegion{"c1", {0.1, 0.0}, vec({0.0})}};
  const ModelConfig config{2.0, AttractionMode::kStoreSpecific};
  const ModelEvaluator eval(d, config);
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);

  VariationalState state;
  state.q_beta = GaussianDiag(vec({0.0}), vec({1.0}));
  state.q_lambda = GaussianDiag(Eigen::VectorXd(0), Eigen::VectorXd(0));
  state.q_epsilon = GaussianDiag(vec({0.0}), vec({1.0}));
  state.q_alpha = GammaDist(1.0, 1.0);
  state.q_gamma = GammaDist(1.0, 1.0);

  RngStream rng(3);
  const double elbo = elbo_estimate(eval, priors, state, 16, rng);
  // L_ell = -ln(2pi)/2 + (psi(1) - ln 1)/2; the only nonzero KL piece is the
  // beta|alpha cross term -psi(1)/2
  const double expected =
      -0.5 * std::log(2.0 * M_PI) + 0.5 * digamma(1.0) - (-0.5 * digamma(1.0));
  CHECK(elbo == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("elbo is deterministic given the rng seed") {
  const Dataset d = gradient_instance();
  const ModelConfig config{5.0, AttractionMode::kFeatureDriven};
  const ModelEvaluator eval(d, config);
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);
  RngStream rng_a(7);
  const VariationalState state = random_state(2, 2, 2, rng_a);
  RngStream r1(11), r2(11), r3(12);
  CHECK(elbo_estimate(eval, priors, state, 8, r1) ==
        elbo_estimate(eval, priors, state, 8, r2));
  CHECK(elbo_estimate(eval, priors, state, 8, r1) !=
        elbo_estimate(eval, priors, state, 8, r3));
}

TEST_CASE("elbo variance shrinks like 1/m") {
  const Dataset d = gradient_instance();
  const ModelConfig config{5.0, AttractionMode::kFeatureDriven};
  const ModelEvaluator eval(d, config);
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);
  RngStream rng_state(21);
  const VariationalState state = random_state(2, 2, 2, rng_state);

  auto variance_at = [&](int m) {
    const int reps = 48;
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream rng(1000 + static_cast<std::uint64_t>(r));
      const double e = elbo_estimate(eval, priors, state, m, rng);
      sum += e;
      sum_sq += e * e;
    }
    return sum_sq / reps - (sum / reps) * (sum / reps);
  };
  const double v8 = variance_at(8), v32 = variance_at(32), v128 = variance_at(128);
  CHECK(v8 > v32);
  CHECK(v32 > v128);
  CHECK(v8 / v32 > 2.0);
  CHECK(v8 / v32 < 8.0);
  CHECK(v32 / v128 > 2.0);
  CHECK(v32 / v128 < 8.0);

  // doubling the sample count moves the estimate by less than 3 MC stderr
  RngStream ra(77), rb(78);
  const double est_a = elbo_estimate(eval, priors, state, 32, ra);
  const double est_b = elbo_estimate(eval, priors, state, 64, rb);
  CHECK(std::abs(est_a - est_b) < 3.0 * std::sqrt(v32));
}

TEST_CASE("analytic gradient matches finite differences at 20 random states") {
  const Dataset d = gradient_instance();
  const ModelConfig config{5.0, AttractionMode::kFeatureDriven};
  const ModelEvaluator eval(d, config);
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);

  RngStream state_rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const VariationalState state = random_state(2, 2, 2, state_rng);
    const std::uint64_t seed = 5000 + static_cast<std::uint64_t>(trial);
    RngStream rng(seed);
    const Eigen::VectorXd analytic = elbo_gradient(eval, priors, state, 4, rng);
    const Eigen::VectorXd numeric = fd_gradient(eval, priors, state, 4, seed, 2, 2, 2);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      const double rel = std::abs(analytic[i] - numeric[i]) /
                         std::max(1.0, std::abs(numeric[i]));
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("KL-only gradient agrees with finite differences to 1e-8") {
  // zero customer features freeze the likelihood part, so the gradient is the
  // analytic KL block alone and finite differences carry no MC noise
  Dataset d;
  d.stores = {Store{"s1", {0.0, 0.0}, vec({0.5, 1.0}), 1.0},
              Store{"s2", {0.5, 0.5}, vec({1.5, 0.3}), -1.0}};
  d.customers = {CustomerRegion{"c1", {0.2, 0.1}, vec({0.0})},
                 CustomerRegion{"c2", {0.4, 0.3}, vec({0.0})}};
  const ModelConfig config{3.0, AttractionMode::kFeatureDriven};
  const ModelEvaluator eval(d, config);
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);

  RngStream state_rng(123);
  const VariationalState state = random_state(1, 2, 2, state_rng);
  RngStream rng(55);
  const Eigen::VectorXd analytic = elbo_gradient(eval, priors, state, 2, rng);
  const Eigen::VectorXd numeric = fd_gradient(eval, priors, state, 2, 55, 1, 2, 2);
  // means and log-variances of lambda/epsilon plus all Gamma coordinates are
  // purely analytic here
  for (Eigen::Index i = 0; i < analytic.size(); ++i)
    CHECK(std::abs(analytic[i] - numeric[i]) < 1e-8 * std::max(1.0, std::abs(numeric[i])));
}

TEST_CASE("gradient vanishes at the prior in a zero-data problem") {
  Dataset d;
  d.stores = {Store{"s1", {0.0, 0.0}, vec({0.5}), 3.0}};
  d.customers = {CustomerRegion{"c1", {0.1, 0.1}, vec({0.0})}};
  const ModelConfig config{2.0, AttractionMode::kFeatureDriven};
  const ModelEvaluator eval(d, config);
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);

  VariationalState state;
  state.q_beta = GaussianDiag(vec({0.3}), vec({0.2}));
  state.q_lambda = GaussianDiag(priors.mu_lambda, vec({priors.var_lambda}));
  state.q_epsilon = GaussianDiag(priors.mu_epsilon, vec({priors.var_epsilon}));
  state.q_alpha = GammaDist(2.0, 3.0);
  state.q_gamma = GammaDist(1.0, 1.0);

  RngStream rng(9);
  const Eigen::VectorXd grad = elbo_gradient(eval, priors, state, 8, rng);
  // lambda and epsilon blocks sit at their KL minimum and do not touch the
  // residual (all budgets are zero)
  const int p2 = 1;
  CHECK(std::abs(grad[2 * p2 + 0]) < 1e-12);      // mu_lambda
  CHECK(std::abs(grad[2 * p2 + 1]) < 1e-12);      // log var lambda
  CHECK(std::abs(grad[2 * p2 + 2]) < 1e-12);      // mu_epsilon
  CHECK(std::abs(grad[2 * p2 + 3]) < 1e-12);      // log var epsilon
}

TEST_CASE("fit_vi recovers the conjugate posterior mean") {
  const int k = 20;
  const double y = 10.0;
  const Dataset d = conjugate_toy(k, y);
  const ModelConfig config{5.0, AttractionMode::kStoreSpecific};
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);

  VIConfig cfg;
  cfg.seed = 31;
  const FitResult fit = fit_vi(d, config, priors, cfg);
  const double oracle = conjugate_posterior_mean(k, y);
  CHECK(std::abs(oracle - 0.5) < 0.01);  // sanity: shrinkage is tiny here
  CHECK(std::abs(fit.state.q_beta.mean[0] - oracle) < 0.01);
  CHECK(fit.iterations_run > 0);
  CHECK(static_cast<int>(fit.elbo_trace.size()) == fit.iterations_run);
}

TEST_CASE("fit_vi is bit-identical across reruns with one seed") {
  const Dataset d = gradient_instance();
  const ModelConfig config{5.0, AttractionMode::kFeatureDriven};
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);
  VIConfig cfg;
  cfg.max_iters = 200;
  cfg.convergence_window = 50;
  cfg.seed = 17;
  const FitResult a = fit_vi(d, config, priors, cfg);
  const FitResult b = fit_vi(d, config, priors, cfg);
  REQUIRE(a.elbo_trace.size() == b.elbo_trace.size());
  for (std::size_t i = 0; i < a.elbo_trace.size(); ++i)
    CHECK(a.elbo_trace[i] == b.elbo_trace[i]);
  CHECK(a.state.q_beta.mean == b.state.q_beta.mean);
  CHECK(a.state.q_gamma.rate == b.state.q_gamma.rate);
}

TEST_CASE("smoothed elbo trace is nondecreasing over the final half") {
  const Dataset d = gradient_instance();
  const ModelConfig config{5.0, AttractionMode::kFeatureDriven};
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);
  VIConfig cfg;
  cfg.max_iters = 1500;
  cfg.seed = 23;
  const FitResult fit = fit_vi(d, config, priors, cfg);
  const auto& tr = fit.elbo_trace;
  const int w = cfg.convergence_window;
  REQUIRE(static_cast<int>(tr.size()) >= 2 * w);

  // MC standard error of the window mean, from the tail
  const int tail_start = static_cast<int>(tr.size()) / 2;
  double mean = 0.0, var = 0.0;
  for (int i = tail_start; i < static_cast<int>(tr.size()); ++i) mean += tr[i];
  mean /= (tr.size() - tail_start);
  for (int i = tail_start; i < static_cast<int>(tr.size()); ++i)
    var += (tr[i] - mean) * (tr[i] - mean);
  var /= (tr.size() - tail_start);
  const double window_se = std::sqrt(var / w);

  auto window_mean = [&](int end) {
    double acc = 0.0;
    for (int i = end - w; i < end; ++i) acc += tr[i];
    return acc / w;
  };
  for (int end = tail_start + 2 * w; end <= static_cast<int>(tr.size()); end += w) {
    CHECK(window_mean(end) >= window_mean(end - w) - 3.0 * window_se);
  }
}

TEST_CASE("summarize produces analytic Gaussian and sampled Gamma intervals") {
  VariationalState state;
  state.q_beta = GaussianDiag(vec({0.4}), vec({0.018 * 0.018}));
  state.q_lambda = GaussianDiag(Eigen::VectorXd(0), Eigen::VectorXd(0));
  state.q_epsilon = GaussianDiag(vec({0.0}), vec({1.0}));
  state.q_alpha = GammaDist(1.0, 1.0);
  state.q_gamma = GammaDist(1.0, 1.0);

  const auto summaries = summarize(state, 0.95);
  const auto& beta = summaries.front();
  CHECK(beta.name == "beta[0]");
  CHECK(beta.mean == doctest::Approx(0.4));
  CHECK(beta.ci_lo == doctest::Approx(0.365).epsilon(0.01));
  CHECK(beta.ci_hi == doctest::Approx(0.435).epsilon(0.01));
  CHECK(std::abs(beta.mean - 0.5 * (beta.ci_lo + beta.ci_hi)) < 1e-12);

  const auto& gamma = summaries.back();
  CHECK(gamma.name == "gamma");
  CHECK(gamma.mean == doctest::Approx(1.0));
  // exponential quantiles -ln(0.975), -ln(0.025)
  CHECK(std::abs(gamma.ci_lo - 0.0253) < 0.02);
  CHECK(std::abs(gamma.ci_hi - 3.689) < 0.05);
}

TEST_CASE("vi divergence carries the trace") {
  const Dataset d = gradient_instance();
  const ModelConfig config{5.0, AttractionMode::kFeatureDriven};
  const PriorSpec priors = PriorSpec::weakly_informative(d, config);
  VIConfig cfg;
  cfg.learning_rate = 1e6;  // blow up on purpose
  cfg.max_iters = 200;
  cfg.seed = 3;
  try {
    fit_vi(d, config, priors, cfg);
    // a blow-up is likely but not guaranteed; nothing to assert if it survived
  } catch (const VIDivergenceError& err) {
    CHECK(!err.trace.empty());
  }
}
