#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "uavfl/config.hpp"
#include "uavfl/metrics.hpp"
#include "uavfl/strategies.hpp"

namespace uavfl {

/// Process exit codes, one per outcome class.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitPartial = 3,
  kExitDiverged = 4,
  kExitSink = 5,
};

int exit_code(RunStatus status);

struct ExperimentResult {
  std::string type_label;
  RunSummary summary;
  RunResult run;
  EnergyLedger ledger;
  Fleet final_fleet;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
  std::filesystem::path fleet_path;
  std::filesystem::path ledger_path;
};

/// Everything a run needs before the scheduler starts: clustered fleet with
/// heads, partitions, evaluation split and initial model.
Simulation build_simulation(const ExperimentConfig& cfg);

/// Centralized baseline: one model trained on the union of the drones' data
/// for ge * le epochs with the plan's hyperparameters, scored on the eval split.
Evaluation centralized_reference(const ExperimentConfig& cfg);

/// spawn -> cluster -> partition -> schedule -> summarize. With `write_files`,
/// writes {label}_{seed}.csv, {label}_{seed}_summary.json,
/// {label}_{seed}_fleet.json and {label}_{seed}_energy.csv into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Summary JSON as written next to the logbook.
std::string summary_file_json(const ExperimentResult& result);

struct SweepGrid {
  /// Cartesian axes: dotted key -> JSON literals.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  /// Explicit runs, each a list of (dotted key, JSON literal).
  std::vector<std::vector<std::pair<std::string, std::string>>> cases;
};

/// {"grid": {"plan.lr": [5, 10]}, "cases": [{"plan.lr": 5, "fleet.n": 10}]}; either part optional.
SweepGrid load_grid(const std::filesystem::path& path);
SweepGrid parse_grid(const std::string& json_text);

struct SweepRow {
  std::string overrides;  // canonical "key=value;..." with sorted keys
  RunSummary summary;
  RunStatus status = RunStatus::completed;
  std::string message;
  bool failed = false;  // configuration or I/O failure before a summary existed
};

/// Runs every grid point into its own subdirectory of base.output_dir and
/// writes sweep_summary.csv / sweep_summary.json sorted by type label.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepGrid& grid,
                                bool write_files = true);

std::string sweep_table_csv(const std::vector<SweepRow>& rows);

}  // namespace uavfl
