#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsim/dataset.hpp"
#include "bsim/mcmc.hpp"
#include "bsim/model.hpp"
#include "bsim/synthetic.hpp"
#include "bsim/vi.hpp"

namespace bsim {

inline constexpr int kSchemaVersion = 1;

// Shortest round-trip decimal representation; locale independent.
std::string format_double(double x);
double parse_double(const std::string& text, const std::string& what);

// Stores CSV columns: id,x,y,revenue,f1..fK. Customers CSV: id,x,y,f1..fK.
// Headers are mandatory.
std::vector<Store> read_stores_csv(const std::filesystem::path& path);
void write_stores_csv(const std::filesystem::path& path, const std::vector<Store>& stores);
std::vector<CustomerRegion> read_customers_csv(const std::filesystem::path& path);
void write_customers_csv(const std::filesystem::path& path,
                         const std::vector<CustomerRegion>& customers);

// One ring as a JSON array of [x, y] pairs.
Polygon read_polygon_json(const std::filesystem::path& path);
void write_polygon_json(const std::filesystem::path& path, const Polygon& polygon);

// Raw CSV access (used for grouping columns on prediction aggregation).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // -1 when absent
};
CsvTable read_csv(const std::filesystem::path& path);

nlohmann::json to_json(const GaussianDiag& d);
nlohmann::json to_json(const GammaDist& d);
nlohmann::json to_json(const VariationalState& state);
VariationalState variational_state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PriorSpec& priors);
PriorSpec prior_spec_from_json(const nlohmann::json& j, const Dataset& data,
                               const ModelConfig& config);
nlohmann::json to_json(const VIConfig& config);
VIConfig vi_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MCMCConfig& config);
MCMCConfig mcmc_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimSpec& spec);
SimSpec sim_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitResult& fit, std::uint64_t seed);
nlohmann::json to_json(const std::vector<ParameterSummary>& summaries);
nlohmann::json to_json(const std::vector<ChainParamSummary>& summaries);
nlohmann::json to_json(const PreprocessReport& report);
nlohmann::json to_json(const StudyReport& report);

void write_chain_csv(const std::filesystem::path& path, const Chain& chain);
void write_study_csv(const std::filesystem::path& path, const StudyReport& report);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bsim
