#include <CLI11.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "bsim/io.hpp"
#include "bsim/metrics.hpp"
#include "bsim/special_functions.hpp"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// invalid configuration -> exit 2; runtime/numeric failure -> exit 1
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// BSIM_A__B=value overrides config["a"]["b"]; values are parsed as JSON when
// possible, else taken as strings.
void apply_env_overrides(json& config) {
  for (char** env = environ; *env != nullptr; ++env) {
    const std::string entry(*env);
    if (entry.rfind("BSIM_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string raw_key = entry.substr(5, eq - 5);
    const std::string raw_value = entry.substr(eq + 1);

    json* node = &config;
    std::string key = to_lower(raw_key);
    std::size_t pos = 0;
    while (true) {
      const auto sep = key.find("__", pos);
      if (sep == std::string::npos) break;
      node = &(*node)[key.substr(pos, sep - pos)];
      pos = sep + 2;
    }
    const std::string leaf = key.substr(pos);
    json value;
    try {
      value = json::parse(raw_value);
    } catch (const json::parse_error&) {
      value = raw_value;
    }
    (*node)[leaf] = value;
  }
}

json load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file does not exist: " + path.string());
  json j;
  try {
    j = bsim::read_json_file(path);
  } catch (const std::exception& err) {
    throw ConfigError(err.what());
  }
  apply_env_overrides(j);
  return j;
}

void require_file(const json& config, const char* key, fs::path& out) {
  if (!config.contains(key))
    throw ConfigError(std::string("config is missing required field '") + key + "'");
  out = config.at(key).get<std::string>();
  if (!fs::exists(out))
    throw ConfigError(std::string("file referenced by '") + key +
                      "' does not exist: " + out.string());
}

fs::path ensure_output_dir(const json& config, const std::string& flag_value) {
  fs::path dir;
  if (!flag_value.empty())
    dir = flag_value;
  else if (config.contains("output_dir"))
    dir = config.at("output_dir").get<std::string>();
  else
    throw ConfigError("no output directory given (flag --out or config output_dir)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir.string());
  return dir;
}

bsim::Dataset load_dataset(const json& config) {
  fs::path stores_path, customers_path;
  require_file(config, "stores", stores_path);
  require_file(config, "customers", customers_path);
  bsim::Dataset data;
  data.stores = bsim::read_stores_csv(stores_path);
  data.customers = bsim::read_customers_csv(customers_path);
  if (config.contains("region") && !config.at("region").is_null()) {
    fs::path region_path;
    require_file(config, "region", region_path);
    data.region = bsim::read_polygon_json(region_path);
  }
  try {
    data.validate();
  } catch (const std::exception& err) {
    throw ConfigError(err.what());
  }
  return data;
}

bsim::SimSpec parse_sim_spec(const json& j) {
  try {
    return bsim::sim_spec_from_json(j);
  } catch (const std::exception& err) {
    throw ConfigError(std::string("invalid simulation spec: ") + err.what());
  }
}

int cmd_simulate(const fs::path& spec_path, const std::string& out_flag, int replicate) {
  json spec_json = load_config(spec_path);
  const bsim::SimSpec spec = parse_sim_spec(spec_json);
  const fs::path out = ensure_output_dir(spec_json, out_flag);

  const auto [data, truth] = bsim::generate_dataset(spec, replicate);
  bsim::write_stores_csv(out / "stores.csv", data.stores);
  bsim::write_customers_csv(out / "customers.csv", data.customers);
  if (data.region) bsim::write_polygon_json(out / "region.json", *data.region);

  json truth_json{{"schema_version", bsim::kSchemaVersion},
                  {"replicate", replicate},
                  {"spec", bsim::to_json(spec)},
                  {"beta", std::vector<double>(truth.beta.data(),
                                               truth.beta.data() + truth.beta.size())},
                  {"lambda", std::vector<double>(truth.lambda.data(),
                                                 truth.lambda.data() + truth.lambda.size())},
                  {"gamma", truth.gamma},
                  {"truncation_radius", spec.effective_truncation_radius()}};
  bsim::write_json_file(out / "truth.json", truth_json);
  std::cout << "wrote " << (out / "stores.csv").string() << " ("
            << data.n_stores() << " stores, " << data.n_customers()
            << " customers)\n";
  return 0;
}

bsim::PreprocessOptions parse_preprocess_options(const json& config) {
  bsim::PreprocessOptions opts;
  if (!config.contains("preprocess")) return opts;
  const json& p = config.at("preprocess");
  opts.log_revenue = p.value("log_revenue", false);
  opts.standardize_features = p.value("standardize", true);
  if (p.contains("edge") && !p.at("edge").is_null()) {
    bsim::EdgeCorrectionConfig edge;
    edge.eta_factor = p.at("edge").value("eta_factor", edge.eta_factor);
    edge.n_samples = p.at("edge").value("n_samples", edge.n_samples);
    edge.seed = p.at("edge").value("seed", edge.seed);
    opts.edge = edge;
  }
  return opts;
}

int cmd_preprocess(const fs::path& config_path, const std::string& out_flag) {
  const json config = load_config(config_path);
  const bsim::Dataset data = load_dataset(config);
  bsim::ModelConfig model_config;
  try {
    model_config = bsim::model_config_from_json(config.at("model"));
  } catch (const std::exception& err) {
    throw ConfigError(std::string("invalid model config: ") + err.what());
  }
  const bsim::PreprocessOptions opts = parse_preprocess_options(config);
  const fs::path out = ensure_output_dir(config, out_flag);

  const auto [processed, report] = bsim::preprocess(data, model_config, opts);
  bsim::write_stores_csv(out / "stores_processed.csv", processed.stores);
  bsim::write_customers_csv(out / "customers_processed.csv", processed.customers);
  json report_json = bsim::to_json(report);
  report_json["config"] = config;
  bsim::write_json_file(out / "preprocess_report.json", report_json);
  std::cout << "wrote " << (out / "stores_processed.csv").string() << "\n";
  return 0;
}

int cmd_fit(const fs::path& config_path, const std::string& out_flag) {
  const json config = load_config(config_path);
  bsim::Dataset data = load_dataset(config);
  bsim::ModelConfig model_config;
  try {
    model_config = bsim::model_config_from_json(config.at("model"));
  } catch (const json::exception&) {
    throw ConfigError("config is missing a valid 'model' block");
  } catch (const std::exception& err) {
    throw ConfigError(std::string("invalid model config: ") + err.what());
  }
  const std::string method = config.value("method", "vi");
  if (method != "vi" && method != "mcmc")
    throw ConfigError("method must be 'vi' or 'mcmc', got '" + method + "'");
  const std::uint64_t seed = config.value("seed", 0ULL);
  const fs::path out = ensure_output_dir(config, out_flag);

  const bsim::PreprocessOptions opts = parse_preprocess_options(config);
  const auto [processed, report] = bsim::preprocess(data, model_config, opts);
  if (opts.edge || opts.log_revenue || opts.standardize_features) {
    json report_json = bsim::to_json(report);
    bsim::write_json_file(out / "preprocess_report.json", report_json);
  }

  bsim::PriorSpec priors;
  try {
    priors = bsim::prior_spec_from_json(config.value("priors", json::object()),
                                        processed, model_config);
  } catch (const std::exception& err) {
    throw ConfigError(std::string("invalid priors: ") + err.what());
  }

  json result{{"schema_version", bsim::kSchemaVersion},
              {"method", method},
              {"seed", seed},
              {"config", config}};
  // timing lives in a sidecar so that fit_result.json is byte-identical on
  // seeded reruns
  json meta{{"schema_version", bsim::kSchemaVersion}, {"method", method}};

  if (method == "vi") {
    bsim::VIConfig vi_config;
    try {
      vi_config = bsim::vi_config_from_json(config.value("vi", json::object()));
    } catch (const std::exception& err) {
      throw ConfigError(std::string("invalid vi config: ") + err.what());
    }
    if (!config.contains("vi") || !config.at("vi").contains("seed")) vi_config.seed = seed;
    const bsim::FitResult fit = bsim::fit_vi(processed, model_config, priors, vi_config);
    result["fit"] = bsim::to_json(fit, vi_config.seed);
    result["fit"].erase("wall_time");
    result["summaries"] = bsim::to_json(bsim::summarize(fit.state, 0.95));
    meta["wall_time"] = fit.wall_time;
    meta["iterations_run"] = fit.iterations_run;
    bsim::write_json_file(out / "fit_result.json", result);
    bsim::write_json_file(out / "run_meta.json", meta);
    std::cout << "vi fit: " << fit.iterations_run << " iterations, wall time "
              << fit.wall_time << " s\n";
  } else {
    bsim::MCMCConfig mcmc_config;
    try {
      mcmc_config = bsim::mcmc_config_from_json(config.value("mcmc", json::object()));
    } catch (const std::exception& err) {
      throw ConfigError(std::string("invalid mcmc config: ") + err.what());
    }
    if (!config.contains("mcmc") || !config.at("mcmc").contains("seed"))
      mcmc_config.seed = seed;
    const bsim::Chain chain = bsim::run_chain(processed, model_config, priors, mcmc_config);
    bsim::write_chain_csv(out / "chain.csv", chain);
    result["chain_csv"] = (out / "chain.csv").string();
    result["accept_rate"] = chain.accept_rate;
    result["n_draws"] = chain.draws.rows();
    result["summaries"] = bsim::to_json(bsim::chain_summary(chain, 0.95));
    meta["wall_time"] = chain.wall_time;
    bsim::write_json_file(out / "fit_result.json", result);
    bsim::write_json_file(out / "run_meta.json", meta);
    std::cout << "mcmc fit: " << chain.draws.rows() << " stored draws, wall time "
              << chain.wall_time << " s\n";
  }
  return 0;
}

// Posterior parameter draws used by `predict`: VI samples the variational
// factors, MCMC reuses the stored chain rows.
std::vector<bsim::ParameterVector> posterior_draws(const json& fit, const bsim::Dataset& data,
                                                   const bsim::ModelConfig& config,
                                                   int n_draws, std::uint64_t seed,
                                                   bsim::ParameterVector& mean_out) {
  const int p2 = data.customer_feature_dim();
  const int d2 = config.attraction_mode == bsim::AttractionMode::kFeatureDriven
                     ? data.store_feature_dim()
                     : 0;
  const int s_dim = data.n_stores();
  std::vector<bsim::ParameterVector> draws;

  const std::string method = fit.value("method", "vi");
  if (method == "vi") {
    const bsim::VariationalState state =
        bsim::variational_state_from_json(fit.at("fit").at("state"));
    if (state.q_beta.dim() != p2 || state.q_lambda.dim() != d2 ||
        state.q_epsilon.dim() != s_dim)
      throw std::runtime_error("predict: fit and dataset dimensions do not match");
    mean_out.beta = state.q_beta.mean;
    mean_out.lambda = state.q_lambda.mean;
    mean_out.epsilon = state.q_epsilon.mean;
    mean_out.gamma = state.q_gamma.mean();
    mean_out.alpha = state.q_alpha.mean();
    bsim::RngStream rng(seed);
    draws.reserve(n_draws);
    for (int i = 0; i < n_draws; ++i) {
      bsim::ParameterVector p;
      p.beta = bsim::sample_gaussian(state.q_beta, rng);
      p.lambda = bsim::sample_gaussian(state.q_lambda, rng);
      p.epsilon = bsim::sample_gaussian(state.q_epsilon, rng);
      p.gamma = bsim::sample_gamma(state.q_gamma, rng);
      p.alpha = bsim::sample_gamma(state.q_alpha, rng);
      draws.push_back(std::move(p));
    }
    return draws;
  }

  // MCMC: thin the stored chain down to n_draws rows
  const fs::path chain_path = fit.at("chain_csv").get<std::string>();
  if (!fs::exists(chain_path))
    throw ConfigError("chain CSV referenced by fit file does not exist: " +
                      chain_path.string());
  const bsim::CsvTable table = bsim::read_csv(chain_path);
  const int rows = static_cast<int>(table.rows.size());
  if (rows == 0) throw std::runtime_error("predict: chain CSV has no draws");
  if (static_cast<int>(table.header.size()) != p2 + d2 + s_dim + 2)
    throw std::runtime_error("predict: fit and dataset dimensions do not match");
  const int stride = std::max(1, rows / n_draws);
  bsim::ParameterVector sum;
  sum.beta = Eigen::VectorXd::Zero(p2);
  sum.lambda = Eigen::VectorXd::Zero(d2);
  sum.epsilon = Eigen::VectorXd::Zero(s_dim);
  sum.gamma = 0.0;
  sum.alpha = 0.0;
  for (int r = 0; r < rows; ++r) {
    bsim::ParameterVector p;
    p.beta.resize(p2);
    p.lambda.resize(d2);
    p.epsilon.resize(s_dim);
    int c = 0;
    for (int k = 0; k < p2; ++k)
      p.beta[k] = bsim::parse_double(table.rows[r][c++], "chain CSV");
    for (int k = 0; k < d2; ++k)
      p.lambda[k] = bsim::parse_double(table.rows[r][c++], "chain CSV");
    for (int k = 0; k < s_dim; ++k)
      p.epsilon[k] = bsim::parse_double(table.rows[r][c++], "chain CSV");
    p.gamma = bsim::parse_double(table.rows[r][c++], "chain CSV");
    p.alpha = bsim::parse_double(table.rows[r][c++], "chain CSV");
    sum.beta += p.beta;
    sum.lambda += p.lambda;
    sum.epsilon += p.epsilon;
    sum.gamma += p.gamma;
    sum.alpha += p.alpha;
    if (r % stride == 0 && static_cast<int>(draws.size()) < n_draws)
      draws.push_back(std::move(p));
  }
  mean_out.beta = sum.beta / rows;
  mean_out.lambda = sum.lambda / rows;
  mean_out.epsilon = sum.epsilon / rows;
  mean_out.gamma = sum.gamma / rows;
  mean_out.alpha = sum.alpha / rows;
  return draws;
}

int cmd_predict(const fs::path& fit_path, const fs::path& stores_path,
                const fs::path& customers_path, const std::string& out_flag,
                bool want_flows, bool want_budgets, const std::string& aggregate_by,
                int n_draws, double level, std::uint64_t seed) {
  if (!fs::exists(fit_path)) throw ConfigError("fit file does not exist: " + fit_path.string());
  if (!fs::exists(stores_path))
    throw ConfigError("stores file does not exist: " + stores_path.string());
  if (!fs::exists(customers_path))
    throw ConfigError("customers file does not exist: " + customers_path.string());
  const json fit = bsim::read_json_file(fit_path);

  bsim::Dataset data;
  data.stores = bsim::read_stores_csv(stores_path);
  data.customers = bsim::read_customers_csv(customers_path);
  data.validate();
  const bsim::ModelConfig model_config =
      bsim::model_config_from_json(fit.at("config").at("model"));

  fs::path out = out_flag.empty() ? fs::path(".") : fs::path(out_flag);
  std::error_code ec;
  fs::create_directories(out, ec);

  bsim::ParameterVector mean_params;
  const auto draws =
      posterior_draws(fit, data, model_config, n_draws, seed, mean_params);

  const bsim::ModelEvaluator eval(data, model_config);
  const Eigen::VectorXd point = eval.predict_revenues(mean_params);

  // predictive draws include observation noise at each sampled precision
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(draws.size()), data.n_stores());
  bsim::RngStream noise_rng(bsim::derive_seed(seed, 0x9d));
  Eigen::VectorXd mc_mean = Eigen::VectorXd::Zero(data.n_stores());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const Eigen::VectorXd yhat = eval.predict_revenues(draws[i]);
    mc_mean += yhat;
    const double noise_sd = 1.0 / std::sqrt(draws[i].gamma);
    for (int s = 0; s < data.n_stores(); ++s)
      samples(static_cast<Eigen::Index>(i), s) = yhat[s] + noise_sd * noise_rng.normal();
  }
  mc_mean /= static_cast<double>(draws.size());

  std::ofstream pred_out(out / "predictions.csv");
  pred_out << "id,predicted,predictive_mean,pi_lo,pi_hi\n";
  const double q_lo = 0.5 - 0.5 * level, q_hi = 0.5 + 0.5 * level;
  for (int s = 0; s < data.n_stores(); ++s) {
    std::vector<double> col(samples.col(s).data(), samples.col(s).data() + samples.rows());
    pred_out << data.stores[s].id << ',' << bsim::format_double(point[s]) << ','
             << bsim::format_double(mc_mean[s]) << ','
             << bsim::format_double(bsim::empirical_quantile(col, q_lo)) << ','
             << bsim::format_double(bsim::empirical_quantile(col, q_hi)) << "\n";
  }
  pred_out.close();

  if (want_flows) {
    const Eigen::MatrixXd flows = eval.expenditure_flows(mean_params);
    std::ofstream flow_out(out / "flows.csv");
    flow_out << "customer_id";
    for (const auto& s : data.stores) flow_out << ',' << s.id;
    flow_out << "\n";
    for (int n = 0; n < data.n_customers(); ++n) {
      flow_out << data.customers[n].id;
      for (int s = 0; s < data.n_stores(); ++s)
        flow_out << ',' << bsim::format_double(flows(n, s));
      flow_out << "\n";
    }
  }

  if (want_budgets || !aggregate_by.empty()) {
    const Eigen::VectorXd budgets = data.customer_feature_matrix() * mean_params.beta;
    if (want_budgets) {
      std::ofstream budget_out(out / "budgets.csv");
      budget_out << "id,budget\n";
      for (int n = 0; n < data.n_customers(); ++n)
        budget_out << data.customers[n].id << ',' << bsim::format_double(budgets[n])
                   << "\n";
    }
    if (!aggregate_by.empty()) {
      const bsim::CsvTable raw = bsim::read_csv(customers_path);
      const int col = raw.column_index(aggregate_by);
      if (col < 0)
        throw ConfigError("aggregate-by column '" + aggregate_by +
                          "' not present in customers CSV");
      if (static_cast<int>(raw.rows.size()) != data.n_customers())
        throw std::runtime_error("customers CSV row count changed between reads");
      std::map<std::string, double> groups;
      for (int n = 0; n < data.n_customers(); ++n)
        groups[raw.rows[n][col]] += budgets[n];
      std::ofstream group_out(out / "budgets_by_group.csv");
      group_out << aggregate_by << ",total_budget\n";
      for (const auto& [key, total] : groups)
        group_out << key << ',' << bsim::format_double(total) << "\n";
    }
  }
  std::cout << "wrote " << (out / "predictions.csv").string() << "\n";
  return 0;
}

int cmd_study(const fs::path& spec_path, const std::string& out_flag) {
  json spec_json = load_config(spec_path);
  const bsim::SimSpec spec = parse_sim_spec(spec_json);
  const fs::path out = ensure_output_dir(spec_json, out_flag);

  bsim::StudyMethods methods;
  if (spec_json.contains("methods")) {
    const auto& m = spec_json.at("methods");
    methods.vi = m.value("vi", true);
    methods.mcmc = m.value("mcmc", true);
    methods.huff = m.value("huff", true);
  }
  methods.epsilon_prior_var =
      spec_json.value("epsilon_prior_var", methods.epsilon_prior_var);
  bsim::VIConfig vi_config;
  bsim::MCMCConfig mcmc_config;
  try {
    vi_config = bsim::vi_config_from_json(spec_json.value("vi", json::object()));
    mcmc_config = bsim::mcmc_config_from_json(spec_json.value("mcmc", json::object()));
  } catch (const std::exception& err) {
    throw ConfigError(std::string("invalid engine config: ") + err.what());
  }
  if (!spec_json.contains("vi") || !spec_json.at("vi").contains("seed"))
    vi_config.seed = spec.seed;
  if (!spec_json.contains("mcmc") || !spec_json.at("mcmc").contains("seed"))
    mcmc_config.seed = spec.seed;

  const bsim::StudyReport report =
      bsim::run_study(spec, methods, vi_config, mcmc_config);
  json report_json = bsim::to_json(report);
  report_json["spec"] = bsim::to_json(spec);
  report_json["vi_config"] = bsim::to_json(vi_config);
  report_json["mcmc_config"] = bsim::to_json(mcmc_config);
  bsim::write_json_file(out / "study_report.json", report_json);
  bsim::write_study_csv(out / "study_report.csv", report);
  std::cout << "study finished: " << report.n_replicates << " replicates, report at "
            << (out / "study_report.json").string() << "\n";
  return 0;
}

int cmd_huff(const fs::path& stores_path, const fs::path& customers_path,
             const std::string& out_flag) {
  if (!fs::exists(stores_path))
    throw ConfigError("stores file does not exist: " + stores_path.string());
  if (!fs::exists(customers_path))
    throw ConfigError("customers file does not exist: " + customers_path.string());
  bsim::Dataset data;
  data.stores = bsim::read_stores_csv(stores_path);
  data.customers = bsim::read_customers_csv(customers_path);
  data.validate();

  fs::path out = out_flag.empty() ? fs::path(".") : fs::path(out_flag);
  std::error_code ec;
  fs::create_directories(out, ec);

  const bsim::HuffFit fit = bsim::fit_huff(data);
  json j{{"schema_version", bsim::kSchemaVersion},
         {"attract_exponents",
          std::vector<double>(fit.params.attract_exponents.data(),
                              fit.params.attract_exponents.data() +
                                  fit.params.attract_exponents.size())},
         {"distance_decay", fit.params.distance_decay},
         {"budget_weights",
          std::vector<double>(fit.params.budget_weights.data(),
                              fit.params.budget_weights.data() +
                                  fit.params.budget_weights.size())},
         {"rss", fit.rss},
         {"r2", fit.r2},
         {"nrmse", fit.nrmse},
         {"used_ridge", fit.used_ridge}};
  bsim::write_json_file(out / "huff_fit.json", j);
  std::ofstream pred_out(out / "huff_predictions.csv");
  pred_out << "id,predicted\n";
  for (int s = 0; s < data.n_stores(); ++s)
    pred_out << data.stores[s].id << ',' << bsim::format_double(fit.predictions[s])
             << "\n";
  std::cout << "huff fit: r2 " << fit.r2 << ", nrmse " << fit.nrmse << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& observed_path,
                 const std::vector<std::string>& pred_specs, const std::string& out_flag) {
  if (!fs::exists(observed_path))
    throw ConfigError("observed file does not exist: " + observed_path.string());
  const auto stores = bsim::read_stores_csv(observed_path);
  std::map<std::string, double> observed;
  for (const auto& s : stores) observed[s.id] = s.revenue;

  json models = json::object();
  for (const std::string& spec : pred_specs) {
    const auto eq = spec.find('=');
    const std::string name = eq == std::string::npos ? "model" : spec.substr(0, eq);
    const fs::path path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    if (!fs::exists(path))
      throw ConfigError("predictions file does not exist: " + path.string());
    const bsim::CsvTable table = bsim::read_csv(path);
    const int id_col = table.column_index("id");
    const int pred_col = table.column_index("predicted");
    if (id_col < 0) throw ConfigError("predictions CSV is missing column 'id'");
    if (pred_col < 0) throw ConfigError("predictions CSV is missing column 'predicted'");
    Eigen::VectorXd y(table.rows.size()), yhat(table.rows.size());
    Eigen::Index k = 0;
    for (const auto& row : table.rows) {
      const auto it = observed.find(row[id_col]);
      if (it == observed.end())
        throw std::runtime_error("prediction id '" + row[id_col] +
                                 "' not found among observed stores");
      y[k] = it->second;
      yhat[k] = bsim::parse_double(row[pred_col], "predictions CSV");
      ++k;
    }
    const bsim::PredictionPair pair{y, yhat};
    models[name] = json{{"r2", bsim::r_squared(pair)}, {"nrmse", bsim::nrmse(pair)}};
  }
  json out_json{{"schema_version", bsim::kSchemaVersion}, {"models", models}};
  if (out_flag.empty()) {
    std::cout << out_json.dump(2) << "\n";
  } else {
    bsim::write_json_file(out_flag, out_json);
    std::cout << "wrote " << out_flag << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial interaction model toolkit"};
  app.require_subcommand(1);

  std::string spec_file, config_file, out_dir;
  int replicate = 0;

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  simulate->add_option("--spec", spec_file, "simulation spec JSON")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--replicate", replicate, "replicate index (default 0)");

  auto* preprocess_cmd =
      app.add_subcommand("preprocess", "Edge-correct, transform and standardize a dataset");
  preprocess_cmd->add_option("--config", config_file, "run config JSON")->required();
  preprocess_cmd->add_option("--out", out_dir, "output directory");

  auto* fit = app.add_subcommand("fit", "Fit the model with VI or MCMC");
  fit->add_option("--config", config_file, "run config JSON")->required();
  fit->add_option("--out", out_dir, "output directory");

  std::string fit_file, stores_file, customers_file, aggregate_by, eval_out;
  bool want_flows = false, want_budgets = false;
  int n_draws = 1000;
  double level = 0.95;
  std::uint64_t predict_seed = 0;
  auto* predict = app.add_subcommand("predict", "Posterior revenue predictions");
  predict->add_option("--fit", fit_file, "fit_result.json from `fit`")->required();
  predict->add_option("--stores", stores_file, "stores CSV")->required();
  predict->add_option("--customers", customers_file, "customers CSV")->required();
  predict->add_option("--out", out_dir, "output directory");
  predict->add_flag("--flows", want_flows, "also write the customer-store flow matrix");
  predict->add_flag("--budgets", want_budgets, "also write per-customer budgets");
  predict->add_option("--aggregate-by", aggregate_by,
                      "sum budgets by this customers-CSV column");
  predict->add_option("--draws", n_draws, "posterior draws for intervals");
  predict->add_option("--level", level, "predictive interval level");
  predict->add_option("--seed", predict_seed, "seed for posterior draws");

  auto* study = app.add_subcommand("study", "Replicate study with bias/MSE/coverage report");
  study->add_option("--spec", spec_file, "study spec JSON")->required();
  study->add_option("--out", out_dir, "output directory");

  auto* huff = app.add_subcommand("huff", "Fit the modified-Huff baseline");
  huff->add_option("--stores", stores_file, "stores CSV")->required();
  huff->add_option("--customers", customers_file, "customers CSV")->required();
  huff->add_option("--out", out_dir, "output directory");

  std::vector<std::string> pred_specs;
  auto* evaluate = app.add_subcommand("evaluate", "Prediction metrics against observed revenue");
  evaluate->add_option("--observed", stores_file, "observed stores CSV")->required();
  evaluate->add_option("--pred", pred_specs, "name=predictions.csv (repeatable)")
      ->required();
  evaluate->add_option("--out", eval_out, "metrics JSON path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(spec_file, out_dir, replicate);
    if (preprocess_cmd->parsed()) return cmd_preprocess(config_file, out_dir);
    if (fit->parsed()) return cmd_fit(config_file, out_dir);
    if (predict->parsed())
      return cmd_predict(fit_file, stores_file, customers_file, out_dir, want_flows,
                         want_budgets, aggregate_by, n_draws, level, predict_seed);
    if (study->parsed()) return cmd_study(spec_file, out_dir);
    if (huff->parsed()) return cmd_huff(stores_file, customers_file, out_dir);
    if (evaluate->parsed()) return cmd_evaluate(stores_file, pred_specs, eval_out);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
