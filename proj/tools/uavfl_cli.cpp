// Command-line driver: run one experiment, sweep a grid, or summarize a logbook.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "uavfl/error.hpp"
#include "uavfl/experiment.hpp"
#include "uavfl/metrics.hpp"

namespace {

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::optional<std::string> out_dir) {
  uavfl::ExperimentConfig cfg = uavfl::load_config(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.plan.seed = *seed;
  }
  if (out_dir) cfg.output_dir = *out_dir;
  const auto result = uavfl::run_experiment(cfg);
  std::cout << uavfl::summary_file_json(result) << '\n';
  return uavfl::exit_code(result.run.status);
}

int sweep_command(const std::string& config_path, const std::string& grid_path,
                  std::optional<std::string> out_dir) {
  uavfl::ExperimentConfig cfg = uavfl::load_config(config_path);
  if (out_dir) cfg.output_dir = *out_dir;
  const auto rows = uavfl::run_sweep(cfg, uavfl::load_grid(grid_path));
  std::cout << uavfl::sweep_table_csv(rows);
  int code = uavfl::kExitOk;
  for (const auto& r : rows) {
    if (r.failed) {
      code = uavfl::kExitFailure;
    } else if (r.status != uavfl::RunStatus::completed && code == uavfl::kExitOk) {
      code = uavfl::exit_code(r.status);
    }
  }
  return code;
}

int summarize_command(const std::string& csv_path) {
  const auto records = uavfl::read_round_csv(csv_path);
  std::cout << uavfl::summary_to_json(uavfl::summarize(records)) << '\n';
  return uavfl::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV fleet decentralized federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the top-level seed");
  run->add_option("--out", out_dir, "Output directory");

  std::string grid_path;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("--config", config_path, "Base experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid_path, "Grid file (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory");

  std::string csv_path;
  auto* summarize = app.add_subcommand("summarize", "Summarize a round logbook CSV");
  summarize->add_option("--in", csv_path, "Round logbook CSV")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, seed, out_dir);
    if (*sweep) return sweep_command(config_path, grid_path, out_dir);
    if (*summarize) return summarize_command(csv_path);
  } catch (const uavfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return uavfl::kExitConfig;
  } catch (const uavfl::SinkError& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return uavfl::kExitSink;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return uavfl::kExitFailure;
  }
  return uavfl::kExitFailure;
}
