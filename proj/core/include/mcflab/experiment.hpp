#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcflab/verify.hpp"

namespace mcflab {

inline constexpr int kConfigSchemaVersion = 1;

struct GridSpec {
  double lo = -2.0;
  double hi = 2.0;
  std::size_t n = 81;
};

struct CheckSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 0;
  std::string model_name;
  nlohmann::json model_params = nlohmann::json::object();
  GridSpec grid;
  std::vector<CheckSpec> checks;
  std::string output_dir = "mcflab-out";
  int jobs = 0;  // 0 keeps the OpenMP default
};

// Throws ConfigError naming the offending field; every check block is parsed
// here so that a bad parameter fails before anything runs.
ExperimentConfig parse_config(const nlohmann::json& j);
// Parse errors report the line and column of the offending character.
ExperimentConfig load_config(const std::string& path);

struct CheckInfo {
  std::string name;
  std::string property;
  std::string summary;
};

std::vector<CheckInfo> list_checks();

struct RunContext {
  const ModelBundle& bundle;
  const BundleFactory& factory;
  GridSpec grid;
  std::uint64_t seed;
};

using PreparedCheck = std::function<CheckReport(const RunContext&)>;
PreparedCheck prepare_check(const CheckSpec& spec);

struct RunResult {
  std::vector<CheckReport> reports;  // sorted by check name, then position in the config
  bool all_pass = true;
};

// Writes reports.jsonl, summary.txt, one CSV per check table and the binary
// fields of interface-driven checks into the output directory.
RunResult run_experiment(const ExperimentConfig& config);

std::string summary_table(const std::vector<CheckReport>& reports);

// Parameters, g report and equilibria of a bundle as plain text.
std::string describe_text(const ModelBundle& bundle);

}  // namespace mcflab
