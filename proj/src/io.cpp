#include "bsim/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bsim {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  Eigen::Index k = 0;
  for (const auto& x : j) v[k++] = x.get<double>();
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

}  // namespace

std::string format_double(double x) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), x);
  return std::string(buffer, result.ptr);
}

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc{})
    throw std::runtime_error("cannot parse number '" + text + "' in " + what);
  return value;
}

std::vector<Store> read_stores_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("stores CSV is empty: " + path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "x" || header[2] != "y" ||
      header[3] != "revenue")
    throw std::runtime_error("stores CSV must start with header id,x,y,revenue: " +
                             path.string());
  const std::size_t n_features = header.size() - 4;
  std::vector<Store> stores;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("stores CSV line " + std::to_string(line_no) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(header.size()));
    Store s;
    s.id = fields[0];
    s.location.x = parse_double(fields[1], "stores CSV column x");
    s.location.y = parse_double(fields[2], "stores CSV column y");
    s.revenue = parse_double(fields[3], "stores CSV column revenue");
    s.features.resize(n_features);
    for (std::size_t k = 0; k < n_features; ++k)
      s.features[k] = parse_double(fields[4 + k], "stores CSV column " + header[4 + k]);
    stores.push_back(std::move(s));
  }
  return stores;
}

void write_stores_csv(const std::filesystem::path& path, const std::vector<Store>& stores) {
  std::ofstream out = open_output(path);
  const Eigen::Index n_features = stores.empty() ? 0 : stores.front().features.size();
  out << "id,x,y,revenue";
  for (Eigen::Index k = 0; k < n_features; ++k) out << ",f" << (k + 1);
  out << "\n";
  for (const Store& s : stores) {
    out << s.id << ',' << format_double(s.location.x) << ',' << format_double(s.location.y)
        << ',' << format_double(s.revenue);
    for (Eigen::Index k = 0; k < s.features.size(); ++k)
      out << ',' << format_double(s.features[k]);
    out << "\n";
  }
}

std::vector<CustomerRegion> read_customers_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("customers CSV is empty: " + path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "x" || header[2] != "y")
    throw std::runtime_error("customers CSV must start with header id,x,y: " +
                             path.string());
  const std::size_t n_features = header.size() - 3;
  std::vector<CustomerRegion> customers;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("customers CSV line " + std::to_string(line_no) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(header.size()));
    CustomerRegion c;
    c.id = fields[0];
    c.location.x = parse_double(fields[1], "customers CSV column x");
    c.location.y = parse_double(fields[2], "customers CSV column y");
    c.features.resize(n_features);
    for (std::size_t k = 0; k < n_features; ++k)
      c.features[k] =
          parse_double(fields[3 + k], "customers CSV column " + header[3 + k]);
    customers.push_back(std::move(c));
  }
  return customers;
}

void write_customers_csv(const std::filesystem::path& path,
                         const std::vector<CustomerRegion>& customers) {
  std::ofstream out = open_output(path);
  const Eigen::Index n_features =
      customers.empty() ? 0 : customers.front().features.size();
  out << "id,x,y";
  for (Eigen::Index k = 0; k < n_features; ++k) out << ",f" << (k + 1);
  out << "\n";
  for (const CustomerRegion& c : customers) {
    out << c.id << ',' << format_double(c.location.x) << ','
        << format_double(c.location.y);
    for (Eigen::Index k = 0; k < c.features.size(); ++k)
      out << ',' << format_double(c.features[k]);
    out << "\n";
  }
}

Polygon read_polygon_json(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  if (!j.is_array())
    throw std::runtime_error("polygon JSON must be an array of [x,y] pairs: " +
                             path.string());
  Polygon poly;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw std::runtime_error("polygon JSON vertex must be an [x,y] pair: " +
                               path.string());
    poly.vertices.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  poly.validate();
  return poly;
}

void write_polygon_json(const std::filesystem::path& path, const Polygon& polygon) {
  json j = json::array();
  for (const Point2& p : polygon.vertices) j.push_back({p.x, p.y});
  write_json_file(path, j);
}

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("CSV is empty: " + path.string());
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.rows.push_back(split_csv_line(line));
  }
  return table;
}

nlohmann::json to_json(const GaussianDiag& d) {
  return json{{"mean", vector_to_json(d.mean)}, {"var", vector_to_json(d.var)}};
}

nlohmann::json to_json(const GammaDist& d) {
  return json{{"shape", d.shape}, {"rate", d.rate}};
}

nlohmann::json to_json(const VariationalState& state) {
  return json{{"q_beta", to_json(state.q_beta)},
              {"q_alpha", to_json(state.q_alpha)},
              {"q_gamma", to_json(state.q_gamma)},
              {"q_lambda", to_json(state.q_lambda)},
              {"q_epsilon", to_json(state.q_epsilon)}};
}

VariationalState variational_state_from_json(const nlohmann::json& j) {
  VariationalState s;
  s.q_beta = GaussianDiag(vector_from_json(j.at("q_beta").at("mean")),
                          vector_from_json(j.at("q_beta").at("var")));
  s.q_lambda = GaussianDiag(vector_from_json(j.at("q_lambda").at("mean")),
                            vector_from_json(j.at("q_lambda").at("var")));
  s.q_epsilon = GaussianDiag(vector_from_json(j.at("q_epsilon").at("mean")),
                             vector_from_json(j.at("q_epsilon").at("var")));
  s.q_alpha = GammaDist(j.at("q_alpha").at("shape").get<double>(),
                        j.at("q_alpha").at("rate").get<double>());
  s.q_gamma = GammaDist(j.at("q_gamma").at("shape").get<double>(),
                        j.at("q_gamma").at("rate").get<double>());
  return s;
}

nlohmann::json to_json(const ModelConfig& config) {
  return json{{"truncation_radius", config.truncation_radius},
              {"attraction_mode",
               config.attraction_mode == AttractionMode::kStoreSpecific
                   ? "store_specific"
                   : "feature_driven"}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig config;
  config.truncation_radius = j.at("truncation_radius").get<double>();
  const std::string mode = j.value("attraction_mode", "feature_driven");
  if (mode == "store_specific")
    config.attraction_mode = AttractionMode::kStoreSpecific;
  else if (mode == "feature_driven")
    config.attraction_mode = AttractionMode::kFeatureDriven;
  else
    throw std::runtime_error("unknown attraction_mode: " + mode);
  config.validate();
  return config;
}

nlohmann::json to_json(const PriorSpec& priors) {
  return json{{"mu_beta", vector_to_json(priors.mu_beta)},
              {"alpha_shape", priors.alpha_shape},
              {"alpha_rate", priors.alpha_rate},
              {"gamma_shape", priors.gamma_shape},
              {"gamma_rate", priors.gamma_rate},
              {"mu_lambda", vector_to_json(priors.mu_lambda)},
              {"var_lambda", priors.var_lambda},
              {"mu_epsilon", vector_to_json(priors.mu_epsilon)},
              {"var_epsilon", priors.var_epsilon}};
}

PriorSpec prior_spec_from_json(const nlohmann::json& j, const Dataset& data,
                               const ModelConfig& config) {
  PriorSpec p = PriorSpec::weakly_informative(data, config);
  if (j.contains("mu_beta")) p.mu_beta = vector_from_json(j.at("mu_beta"));
  if (j.contains("mu_lambda")) p.mu_lambda = vector_from_json(j.at("mu_lambda"));
  if (j.contains("mu_epsilon")) p.mu_epsilon = vector_from_json(j.at("mu_epsilon"));
  p.alpha_shape = j.value("alpha_shape", p.alpha_shape);
  p.alpha_rate = j.value("alpha_rate", p.alpha_rate);
  p.gamma_shape = j.value("gamma_shape", p.gamma_shape);
  p.gamma_rate = j.value("gamma_rate", p.gamma_rate);
  p.var_lambda = j.value("var_lambda", p.var_lambda);
  p.var_epsilon = j.value("var_epsilon", p.var_epsilon);
  p.validate();
  return p;
}

nlohmann::json to_json(const VIConfig& config) {
  return json{{"mc_samples", config.mc_samples},
              {"max_iters", config.max_iters},
              {"learning_rate", config.learning_rate},
              {"lr_decay_iters", config.lr_decay_iters},
              {"adam_betas", {config.adam_betas.first, config.adam_betas.second}},
              {"convergence_window", config.convergence_window},
              {"convergence_tol", config.convergence_tol},
              {"seed", config.seed},
              {"tail_average", config.tail_average},
              {"informed_init", config.informed_init}};
}

VIConfig vi_config_from_json(const nlohmann::json& j) {
  VIConfig c;
  c.mc_samples = j.value("mc_samples", c.mc_samples);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_decay_iters = j.value("lr_decay_iters", c.lr_decay_iters);
  if (j.contains("adam_betas")) {
    c.adam_betas.first = j.at("adam_betas").at(0).get<double>();
    c.adam_betas.second = j.at("adam_betas").at(1).get<double>();
  }
  c.convergence_window = j.value("convergence_window", c.convergence_window);
  c.convergence_tol = j.value("convergence_tol", c.convergence_tol);
  c.seed = j.value("seed", c.seed);
  c.tail_average = j.value("tail_average", c.tail_average);
  c.informed_init = j.value("informed_init", c.informed_init);
  c.validate();
  return c;
}

nlohmann::json to_json(const MCMCConfig& config) {
  return json{{"iterations", config.iterations},
              {"warmup", config.warmup},
              {"thin", config.thin},
              {"init_step_sizes", vector_to_json(config.init_step_sizes)},
              {"target_accept", config.target_accept},
              {"target_accept_pair", config.target_accept_pair},
              {"seed", config.seed}};
}

MCMCConfig mcmc_config_from_json(const nlohmann::json& j) {
  MCMCConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.warmup = j.value("warmup", c.warmup);
  c.thin = j.value("thin", c.thin);
  if (j.contains("init_step_sizes")) {
    if (j.at("init_step_sizes").is_number()) {
      c.init_step_sizes = Eigen::VectorXd::Constant(
          1, j.at("init_step_sizes").get<double>());
    } else {
      c.init_step_sizes = vector_from_json(j.at("init_step_sizes"));
    }
  }
  c.target_accept = j.value("target_accept", c.target_accept);
  c.target_accept_pair = j.value("target_accept_pair", c.target_accept_pair);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json to_json(const SimSpec& spec) {
  return json{{"n_stores", spec.n_stores},
              {"n_customers", spec.n_customers},
              {"true_beta", vector_to_json(spec.true_beta)},
              {"true_lambda", vector_to_json(spec.true_lambda)},
              {"true_gamma", spec.true_gamma},
              {"lengthscales", vector_to_json(spec.lengthscales)},
              {"domain", spec.domain},
              {"truncation_radius", spec.truncation_radius},
              {"feature_offset", spec.feature_offset},
              {"n_replicates", spec.n_replicates},
              {"seed", spec.seed}};
}

SimSpec sim_spec_from_json(const nlohmann::json& j) {
  SimSpec s = SimSpec::sim1();
  s.n_stores = j.value("n_stores", s.n_stores);
  s.n_customers = j.value("n_customers", s.n_customers);
  if (j.contains("true_beta")) s.true_beta = vector_from_json(j.at("true_beta"));
  if (j.contains("true_lambda")) s.true_lambda = vector_from_json(j.at("true_lambda"));
  s.true_gamma = j.value("true_gamma", s.true_gamma);
  if (j.contains("lengthscales")) s.lengthscales = vector_from_json(j.at("lengthscales"));
  s.domain = j.value("domain", s.domain);
  s.truncation_radius = j.value("truncation_radius", s.truncation_radius);
  s.feature_offset = j.value("feature_offset", s.feature_offset);
  s.n_replicates = j.value("n_replicates", s.n_replicates);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

nlohmann::json to_json(const FitResult& fit, std::uint64_t seed) {
  return json{{"schema_version", kSchemaVersion},
              {"state", to_json(fit.state)},
              {"elbo_trace", fit.elbo_trace},
              {"seed", seed},
              {"wall_time", fit.wall_time},
              {"iterations_run", fit.iterations_run},
              {"converged", fit.converged}};
}

nlohmann::json to_json(const std::vector<ParameterSummary>& summaries) {
  json j = json::array();
  for (const auto& s : summaries) {
    j.push_back(json{{"name", s.name},
                     {"mean", s.mean},
                     {"std", s.stddev},
                     {"ci_lo", s.ci_lo},
                     {"ci_hi", s.ci_hi}});
  }
  return j;
}

nlohmann::json to_json(const std::vector<ChainParamSummary>& summaries) {
  json j = json::array();
  for (const auto& s : summaries) {
    j.push_back(json{{"name", s.name},
                     {"mean", s.mean},
                     {"std", s.stddev},
                     {"ci_lo", s.ci_lo},
                     {"ci_hi", s.ci_hi},
                     {"ess", s.ess}});
  }
  return j;
}

nlohmann::json to_json(const PreprocessReport& report) {
  json j{{"schema_version", kSchemaVersion},
         {"log_revenue", report.log_revenue},
         {"standardized", report.standardized}};
  if (report.standardized) {
    j["store_feature_mean"] = vector_to_json(report.store_feature_mean);
    j["store_feature_std"] = vector_to_json(report.store_feature_std);
    j["customer_feature_mean"] = vector_to_json(report.customer_feature_mean);
    j["customer_feature_std"] = vector_to_json(report.customer_feature_std);
  }
  if (report.area_fractions.size() > 0)
    j["area_fractions"] = vector_to_json(report.area_fractions);
  return j;
}

nlohmann::json to_json(const StudyReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    json params = json::array();
    for (const auto& p : m.params) {
      params.push_back(json{{"name", p.name},
                            {"truth", p.truth},
                            {"bias", p.bias},
                            {"mse", p.mse},
                            {"coverage", p.coverage}});
    }
    methods.push_back(json{{"method", m.method},
                           {"params", params},
                           {"mean_r2", m.mean_r2},
                           {"mean_nrmse", m.mean_nrmse},
                           {"wall_time", m.total_wall_time},
                           {"n_failed", m.n_failed}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"n_replicates", report.n_replicates},
              {"ci_level", report.ci_level},
              {"methods", methods}};
}

void write_chain_csv(const std::filesystem::path& path, const Chain& chain) {
  std::ofstream out = open_output(path);
  for (std::size_t i = 0; i < chain.names.size(); ++i) {
    if (i) out << ',';
    out << chain.names[i];
  }
  out << "\n";
  for (Eigen::Index r = 0; r < chain.draws.rows(); ++r) {
    for (Eigen::Index c = 0; c < chain.draws.cols(); ++c) {
      if (c) out << ',';
      out << format_double(chain.draws(r, c));
    }
    out << "\n";
  }
}

void write_study_csv(const std::filesystem::path& path, const StudyReport& report) {
  std::ofstream out = open_output(path);
  out << "replicate,method,failed,parameter,estimate,ci_lo,ci_hi,r2,nrmse,wall_time\n";
  for (const auto& r : report.replicates) {
    if (r.failed) {
      out << r.replicate << ',' << r.method << ",1,,,,,,," << "\n";
      continue;
    }
    if (r.param_names.empty()) {
      out << r.replicate << ',' << r.method << ",0,,,,"
          << ',' << format_double(r.r2) << ',' << format_double(r.nrmse) << ','
          << format_double(r.wall_time) << "\n";
      continue;
    }
    for (std::size_t k = 0; k < r.param_names.size(); ++k) {
      out << r.replicate << ',' << r.method << ",0," << r.param_names[k] << ','
          << format_double(r.estimates[k]) << ',' << format_double(r.cis[k].first)
          << ',' << format_double(r.cis[k].second) << ',' << format_double(r.r2) << ','
          << format_double(r.nrmse) << ',' << format_double(r.wall_time) << "\n";
    }
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& err) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + err.what());
  }
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
}

}  // namespace bsim
