#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tgm/market.hpp"

namespace tgm {

// malformed document or schema violation; semantic value errors surface as
// std::invalid_argument from the builders instead
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name;
  MarketModel market;          // spot/maturity/laws/regimes/rates
  int initial_state = 0;
  std::string payoff_kind;     // "call" | "put" | "digital", empty when absent
  OptionSpec option;           // built when an option block is present
  nlohmann::ordered_json task; // schema-checked: kind, seed, per-task params
  std::string prefix;          // output file prefix
};

ExperimentConfig parse_config(const nlohmann::ordered_json& doc);
ExperimentConfig load_config(const std::string& path);

// dotted-path assignment "task.seed=7"; the value is parsed as JSON when
// possible and kept as a string otherwise
void apply_override(nlohmann::ordered_json& doc, const std::string& assignment);

// switching + regimes view of the model block
ProcessModel process_model(const ExperimentConfig& cfg);

}  // namespace tgm
