#include "bsim/synthetic.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bsim/distributions.hpp"
#include "bsim/metrics.hpp"

namespace bsim {

SimSpec SimSpec::sim1() {
  SimSpec s;
  s.n_stores = 10;
  s.n_customers = 1000;
  s.true_beta = Eigen::Vector2d(-0.2, 0.4);
  s.true_lambda = Eigen::Vector2d(0.1, 0.5);
  s.true_gamma = 4.0;
  s.lengthscales = Eigen::Vector2d(2.4, 0.6);
  s.domain = 6.0;
  return s;
}

SimSpec SimSpec::sim2() {
  SimSpec s = sim1();
  s.n_stores = 50;
  s.n_customers = 2000;
  return s;
}

double SimSpec::effective_truncation_radius() const {
  return truncation_radius > 0.0 ? truncation_radius
                                 : 2.0 * std::sqrt(2.0) * domain;
}

ModelConfig SimSpec::model_config() const {
  return {effective_truncation_radius(), AttractionMode::kFeatureDriven};
}

void SimSpec::validate() const {
  if (n_stores < 1) throw std::invalid_argument("SimSpec: n_stores must be >= 1");
  if (n_customers < 1) throw std::invalid_argument("SimSpec: n_customers must be >= 1");
  if (true_beta.size() < 1)
    throw std::invalid_argument("SimSpec: true_beta must be nonempty");
  if (lengthscales.size() != true_beta.size())
    throw std::invalid_argument(
        "SimSpec: lengthscales must match true_beta (one per customer feature)");
  if (!(lengthscales.array() > 0.0).all())
    throw std::invalid_argument("SimSpec: lengthscales must be positive");
  if (!(true_gamma > 0.0)) throw std::invalid_argument("SimSpec: true_gamma must be positive");
  if (!(domain > 0.0)) throw std::invalid_argument("SimSpec: domain must be positive");
  if (n_replicates < 1)
    throw std::invalid_argument("SimSpec: n_replicates must be >= 1");
}

double gp_kernel(double distance, double lengthscale) {
  return std::exp(-distance * distance / (2.0 * lengthscale * lengthscale));
}

Eigen::VectorXd sample_gp_feature(const std::vector<Point2>& locations,
                                  double lengthscale, RngStream& rng) {
  if (locations.empty())
    throw std::invalid_argument("sample_gp_feature: needs at least one location");
  const Eigen::Index n = static_cast<Eigen::Index>(locations.size());
  Eigen::MatrixXd kernel(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kernel(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double k = gp_kernel(euclidean_distance(locations[i], locations[j]),
                                 lengthscale);
      kernel(i, j) = k;
      kernel(j, i) = k;
    }
  }

  Eigen::VectorXd white(n);
  for (Eigen::Index i = 0; i < n; ++i) white[i] = rng.normal();

  double nugget = 1e-6;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd work = kernel;
    work.diagonal().array() += nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd z = llt.matrixL() * white;
      const double mean = z.mean();
      const double sd = std::sqrt((z.array() - mean).square().mean());
      if (sd == 0.0) return Eigen::VectorXd::Zero(n);
      return (z.array() - mean) / sd;
    }
    nugget *= 10.0;
  }
  throw std::runtime_error("sample_gp_feature: kernel Cholesky failed after nugget boosts");
}

std::pair<Dataset, ParameterVector> generate_dataset(const SimSpec& spec,
                                                     int replicate_index) {
  spec.validate();
  RngStream rng = RngStream::substream(spec.seed, static_cast<std::uint64_t>(replicate_index));

  Dataset data;
  // draw order: customer locations, GP features, store locations, store
  // features, revenue noise
  std::vector<Point2> customer_locs(spec.n_customers);
  for (Point2& p : customer_locs) {
    p.x = rng.uniform(0.0, spec.domain);
    p.y = rng.uniform(0.0, spec.domain);
  }
  const Eigen::Index n_features = spec.lengthscales.size();
  Eigen::MatrixXd features(spec.n_customers, n_features);
  for (Eigen::Index k = 0; k < n_features; ++k) {
    features.col(k) = sample_gp_feature(customer_locs, spec.lengthscales[k], rng).array() +
                      spec.feature_offset;
  }
  data.customers.resize(spec.n_customers);
  for (int i = 0; i < spec.n_customers; ++i) {
    data.customers[i].id = "c" + std::to_string(i + 1);
    data.customers[i].location = customer_locs[i];
    data.customers[i].features = features.row(i).transpose();
  }

  data.stores.resize(spec.n_stores);
  const Eigen::Index d2 = spec.true_lambda.size();
  for (int s = 0; s < spec.n_stores; ++s) {
    data.stores[s].id = "s" + std::to_string(s + 1);
    data.stores[s].location.x = rng.uniform(0.0, spec.domain);
    data.stores[s].location.y = rng.uniform(0.0, spec.domain);
  }
  for (int s = 0; s < spec.n_stores; ++s) {
    Eigen::VectorXd phi(d2);
    for (Eigen::Index k = 0; k < d2; ++k) phi[k] = sample_gamma(1.0, 1.0, rng);
    data.stores[s].features = phi;
  }

  ParameterVector truth;
  truth.beta = spec.true_beta;
  truth.lambda = spec.true_lambda;
  truth.epsilon = Eigen::VectorXd::Zero(spec.n_stores);
  truth.gamma = spec.true_gamma;
  truth.alpha = 1.0;

  const ModelConfig config = spec.model_config();
  const ModelEvaluator eval(data, config);
  const Eigen::VectorXd yhat = eval.predict_revenues(truth);
  const double noise_sd = 1.0 / std::sqrt(spec.true_gamma);
  for (int s = 0; s < spec.n_stores; ++s)
    data.stores[s].revenue = yhat[s] + noise_sd * rng.normal();

  data.region = Polygon::rectangle(0.0, 0.0, spec.domain, spec.domain);
  return {std::move(data), std::move(truth)};
}

double morans_i(const std::vector<Point2>& locations, const Eigen::VectorXd& values,
                int k_neighbors) {
  const int n = static_cast<int>(locations.size());
  if (n < 2 || values.size() != n)
    throw std::invalid_argument("morans_i: need matching locations and values");
  k_neighbors = std::min(k_neighbors, n - 1);
  const double mean = values.mean();
  const Eigen::ArrayXd z = values.array() - mean;
  const double denom = z.square().sum();
  if (denom == 0.0) throw std::invalid_argument("morans_i: constant values");

  double weighted = 0.0;
  double weight_sum = 0.0;
  std::vector<std::pair<double, int>> dists(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      dists[j] = {j == i ? std::numeric_limits<double>::infinity()
                         : euclidean_distance(locations[i], locations[j]),
                  j};
    std::partial_sort(dists.begin(), dists.begin() + k_neighbors, dists.end());
    for (int k = 0; k < k_neighbors; ++k) {
      weighted += z[i] * z[dists[k].second];
      weight_sum += 1.0;
    }
  }
  return (n / weight_sum) * (weighted / denom);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + tag);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

StudyFitter make_vi_fitter(const VIConfig& base_config, double epsilon_prior_var) {
  return [base_config, epsilon_prior_var](const Dataset& data, const ModelConfig& config,
                                          int replicate) {
    VIConfig cfg = base_config;
    cfg.seed = derive_seed(base_config.seed, static_cast<std::uint64_t>(replicate));
    PriorSpec priors = PriorSpec::weakly_informative(data, config);
    priors.var_epsilon = epsilon_prior_var;
    const FitResult fit = fit_vi(data, config, priors, cfg);

    FitOutput out;
    out.wall_time = fit.wall_time;
    const auto summaries = summarize(fit.state, 0.95);
    for (const auto& s : summaries) {
      if (s.name.rfind("beta", 0) == 0 || s.name.rfind("lambda", 0) == 0 ||
          s.name == "gamma") {
        out.param_names.push_back(s.name);
        out.cis.emplace_back(s.ci_lo, s.ci_hi);
      }
    }
    out.estimates.resize(out.param_names.size());
    Eigen::Index k = 0;
    for (const auto& s : summaries) {
      if (s.name.rfind("beta", 0) == 0 || s.name.rfind("lambda", 0) == 0 ||
          s.name == "gamma")
        out.estimates[k++] = s.mean;
    }

    ParameterVector mean_params;
    mean_params.beta = fit.state.q_beta.mean;
    mean_params.lambda = fit.state.q_lambda.mean;
    mean_params.epsilon = fit.state.q_epsilon.mean;
    mean_params.gamma = fit.state.q_gamma.mean();
    mean_params.alpha = fit.state.q_alpha.mean();
    out.predictions = predict_revenues(data, config, mean_params);
    return out;
  };
}

StudyFitter make_mcmc_fitter(const MCMCConfig& base_config, double epsilon_prior_var) {
  return [base_config, epsilon_prior_var](const Dataset& data, const ModelConfig& config,
                                          int replicate) {
    MCMCConfig cfg = base_config;
    cfg.seed = derive_seed(base_config.seed, static_cast<std::uint64_t>(replicate));
    PriorSpec priors = PriorSpec::weakly_informative(data, config);
    priors.var_epsilon = epsilon_prior_var;
    const Chain chain = run_chain(data, config, priors, cfg);
    const auto summaries = chain_summary(chain, 0.95);

    FitOutput out;
    out.wall_time = chain.wall_time;
    Eigen::VectorXd col_means = chain.draws.colwise().mean();
    for (const auto& s : summaries) {
      if (s.name.rfind("beta", 0) == 0 || s.name.rfind("lambda", 0) == 0 ||
          s.name == "gamma") {
        out.param_names.push_back(s.name);
        out.cis.emplace_back(s.ci_lo, s.ci_hi);
      }
    }
    out.estimates.resize(out.param_names.size());
    Eigen::Index k = 0;
    for (const auto& s : summaries) {
      if (s.name.rfind("beta", 0) == 0 || s.name.rfind("lambda", 0) == 0 ||
          s.name == "gamma")
        out.estimates[k++] = s.mean;
    }

    const int p2 = data.customer_feature_dim();
    const int d2 = config.attraction_mode == AttractionMode::kFeatureDriven
                       ? data.store_feature_dim()
                       : 0;
    ParameterVector mean_params;
    mean_params.beta = col_means.segment(0, p2);
    mean_params.lambda = col_means.segment(p2, d2);
    mean_params.epsilon = col_means.segment(p2 + d2, data.n_stores());
    mean_params.gamma = col_means[p2 + d2 + data.n_stores()];
    mean_params.alpha = col_means[p2 + d2 + data.n_stores() + 1];
    out.predictions = predict_revenues(data, config, mean_params);
    return out;
  };
}

StudyFitter make_huff_fitter(const HuffGrid& grid) {
  return [grid](const Dataset& data, const ModelConfig&, int) {
    const auto t0 = std::chrono::steady_clock::now();
    const HuffFit fit = fit_huff(data, grid);
    FitOutput out;
    out.predictions = fit.predictions;
    out.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  };
}

StudyReport run_study_with_fitters(
    const SimSpec& spec,
    const std::vector<std::pair<std::string, StudyFitter>>& fitters, double ci_level) {
  spec.validate();
  if (spec.n_replicates < 2)
    throw std::invalid_argument("run_study: needs at least 2 replicates");

  StudyReport report;
  report.n_replicates = spec.n_replicates;
  report.ci_level = ci_level;

  const ModelConfig config = spec.model_config();
  std::vector<double> truths;  // aligned with tracked parameter order
  std::vector<std::string> truth_names;
  for (Eigen::Index i = 0; i < spec.true_beta.size(); ++i) {
    truth_names.push_back("beta[" + std::to_string(i) + "]");
    truths.push_back(spec.true_beta[i]);
  }
  for (Eigen::Index i = 0; i < spec.true_lambda.size(); ++i) {
    truth_names.push_back("lambda[" + std::to_string(i) + "]");
    truths.push_back(spec.true_lambda[i]);
  }
  truth_names.push_back("gamma");
  truths.push_back(spec.true_gamma);

  for (int rep = 0; rep < spec.n_replicates; ++rep) {
    const auto [data, truth] = generate_dataset(spec, rep);
    const Eigen::VectorXd y = data.revenues();
    for (const auto& [name, fitter] : fitters) {
      ReplicateRecord record;
      record.replicate = rep;
      record.method = name;
      try {
        const FitOutput fit = fitter(data, config, rep);
        record.param_names = fit.param_names;
        record.estimates.assign(fit.estimates.data(),
                                fit.estimates.data() + fit.estimates.size());
        record.cis = fit.cis;
        record.wall_time = fit.wall_time;
        const PredictionPair pair{y, fit.predictions};
        record.r2 = r_squared(pair);
        record.nrmse = nrmse(pair);
      } catch (const std::exception& err) {
        record.failed = true;
        record.error = err.what();
      }
      report.replicates.push_back(std::move(record));
    }
  }

  for (const auto& [name, fitter] : fitters) {
    (void)fitter;
    MethodStudyStats stats;
    stats.method = name;
    std::vector<const ReplicateRecord*> ok;
    for (const auto& r : report.replicates) {
      if (r.method != name) continue;
      if (r.failed)
        ++stats.n_failed;
      else
        ok.push_back(&r);
    }
    if (stats.n_failed * 5 > spec.n_replicates)
      throw std::runtime_error("run_study: method " + name + " failed on " +
                               std::to_string(stats.n_failed) + " of " +
                               std::to_string(spec.n_replicates) + " replicates");
    for (const auto* r : ok) {
      stats.mean_r2 += r->r2;
      stats.mean_nrmse += r->nrmse;
      stats.total_wall_time += r->wall_time;
    }
    if (!ok.empty()) {
      stats.mean_r2 /= static_cast<double>(ok.size());
      stats.mean_nrmse /= static_cast<double>(ok.size());
    }
    if (!ok.empty() && !ok.front()->param_names.empty()) {
      for (std::size_t k = 0; k < truth_names.size(); ++k) {
        std::vector<double> estimates;
        std::vector<std::pair<double, double>> cis;
        for (const auto* r : ok) {
          for (std::size_t j = 0; j < r->param_names.size(); ++j) {
            if (r->param_names[j] == truth_names[k]) {
              estimates.push_back(r->estimates[j]);
              cis.push_back(r->cis[j]);
            }
          }
        }
        if (estimates.empty()) continue;
        const auto [bias, mse, coverage] = bias_mse_coverage(estimates, cis, truths[k]);
        stats.params.push_back({truth_names[k], truths[k], bias, mse, coverage});
      }
    }
    report.methods.push_back(std::move(stats));
  }
  return report;
}

StudyReport run_study(const SimSpec& spec, const StudyMethods& methods,
                      const VIConfig& vi_config, const MCMCConfig& mcmc_config,
                      const HuffGrid& huff_grid, double ci_level) {
  std::vector<std::pair<std::string, StudyFitter>> fitters;
  if (methods.vi)
    fitters.emplace_back("vi", make_vi_fitter(vi_config, methods.epsilon_prior_var));
  if (methods.mcmc)
    fitters.emplace_back("mcmc",
                         make_mcmc_fitter(mcmc_config, methods.epsilon_prior_var));
  if (methods.huff) fitters.emplace_back("huff", make_huff_fitter(huff_grid));
  return run_study_with_fitters(spec, fitters, ci_level);
}

}  // namespace bsim
