#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "uavfl/data.hpp"
#include "uavfl/energy.hpp"
#include "uavfl/fleet.hpp"
#include "uavfl/strategies.hpp"

namespace uavfl {

struct FleetConfig {
  std::size_t n = 20;
  Area area{10.0, 10.0};
  double altitude = 0.0;
  double capacity_wh = 274.0;  // E_d

  friend bool operator==(const FleetConfig&, const FleetConfig&) = default;
};

struct ModelConfig {
  std::size_t hidden = 0;  // 0: multinomial logistic regression
  std::size_t bytes_per_value = 4;
  /// Message size override in bytes, e.g. ~4.5e7 for a ResNet-18-sized model.
  std::optional<std::uint64_t> paper_model_bytes;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DataConfig {
  /// "synthetic" or a path to a CSV dataset (label first).
  std::string source = "synthetic";
  std::size_t per_drone = 40;
  double overlap = 0.0;
  double eval_fraction = 0.1;
  /// Synthetic generator; total == 0 sizes the source so drones get disjoint data.
  BlobSpec blobs{10000, 32, 10, 1.0, 2.0};

  friend bool operator==(const DataConfig& a, const DataConfig& b) {
    return a.source == b.source && a.per_drone == b.per_drone && a.overlap == b.overlap &&
           a.eval_fraction == b.eval_fraction && a.blobs.total == b.blobs.total &&
           a.blobs.dim == b.blobs.dim && a.blobs.classes == b.blobs.classes &&
           a.blobs.center_scale == b.blobs.center_scale && a.blobs.noise == b.blobs.noise;
  }
};

struct ExperimentConfig {
  std::uint64_t seed = 42;  // drives every random choice of a run
  FleetConfig fleet;
  TrainingPlan plan;  // plan.seed mirrors `seed`
  ModelConfig model;
  ChannelConfig channel;
  ComputePowerConfig compute;  // battery_capacity_wh mirrors fleet.capacity_wh
  DataConfig data;
  std::filesystem::path output_dir = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Checks every nested invariant; throws ConfigError naming the key.
void validate(const ExperimentConfig& cfg);

/// Parses JSON text. Omitted keys keep their defaults; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Sets a dotted key ("plan.lr") in the JSON form of `base` and re-parses.
/// `value_json` is a JSON literal.
ExperimentConfig with_override(const ExperimentConfig& base, const std::string& dotted_key,
                               const std::string& value_json);

}  // namespace uavfl
