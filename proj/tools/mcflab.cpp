#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mcflab/errors.hpp"
#include "mcflab/experiment.hpp"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;

int run(const std::string& path, const std::optional<std::uint64_t>& seed, const std::optional<int>& jobs,
        const std::optional<std::string>& out) {
  auto config = mcflab::load_config(path);
  if (seed) config.seed = *seed;
  if (jobs) config.jobs = *jobs;
  if (out) config.output_dir = *out;
  const auto result = mcflab::run_experiment(config);
  std::cout << mcflab::summary_table(result.reports);
  std::cout << result.reports.size() << " check(s), " << (result.all_pass ? "all passed" : "some failed")
            << "; results in " << config.output_dir << '\n';
  return result.all_pass ? 0 : kExitFail;
}

int describe(const std::string& name, const std::string& params) {
  nlohmann::json p = nlohmann::json::object();
  if (!params.empty()) {
    try {
      p = nlohmann::json::parse(params);
    } catch (const nlohmann::json::parse_error& e) {
      throw mcflab::ConfigError(std::string("--params: ") + e.what());
    }
  }
  const auto names = mcflab::model_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string known;
    for (const auto& n : names) known += " " + n;
    throw mcflab::ConfigError("unknown model '" + name + "'; known:" + known);
  }
  std::cout << mcflab::describe_text(mcflab::make_bundle(name, p));
  return 0;
}

int list_checks() {
  for (const auto& c : mcflab::list_checks()) std::printf("%-22s %-32s %s\n", c.name.c_str(), c.property.c_str(), c.summary.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo verification of voting duals and generalized mean curvature flow"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run the checks of a JSON experiment config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  run_cmd->add_option("--config,-c", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Override the master seed");
  run_cmd->add_option("--jobs,-j", jobs, "Worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--out,-o", out, "Output directory");

  auto* describe_cmd = app.add_subcommand("describe", "Print a model bundle's parameters, g report and equilibria");
  std::string model;
  std::string params;
  describe_cmd->add_option("model", model, "Model name")->required();
  describe_cmd->add_option("--params", params, "Model parameters as a JSON object");

  auto* list_cmd = app.add_subcommand("list-checks", "List the available checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return run(config_path, seed, jobs, out);
    if (*describe_cmd) return describe(model, params);
    if (*list_cmd) return list_checks();
  } catch (const mcflab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcflab::ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mcflab::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return 0;
}
