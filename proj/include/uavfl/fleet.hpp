#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavfl/model.hpp"

namespace uavfl {

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

/// Euclidean distance in meters.
double distance(const Position& q, const Position& q2);

struct DroneState {
  int id = 0;
  Position position;
  double battery_capacity_wh = 0.0;
  double battery_remaining_wh = 0.0;
  bool depleted = false;
  int cluster_id = -1;  // -1 until clustering is applied
  bool is_head = false;
  ModelParams params;
  int partition_id = -1;

  bool alive() const noexcept { return !depleted && battery_remaining_wh > 0.0; }
  double battery_fraction() const noexcept {
    return battery_capacity_wh > 0.0 ? battery_remaining_wh / battery_capacity_wh : 0.0;
  }
};

struct Area {
  double width = 10.0;   // meters
  double height = 10.0;  // meters

  friend bool operator==(const Area&, const Area&) = default;
};

struct Fleet {
  std::vector<DroneState> drones;
  Area area;
  std::uint64_t rng_seed = 0;

  std::size_t size() const noexcept { return drones.size(); }
  int cluster_count() const;
  /// Member ids of one cluster, in ascending id order.
  std::vector<int> members(int cluster_id) const;
  /// Head of a cluster, if one is elected.
  std::optional<int> head(int cluster_id) const;
};

/// Uniform placement over the area at a fixed altitude. Throws InvalidFleetError when n < 2.
Fleet spawn_fleet(std::size_t n, Area area, double altitude_m, double capacity_wh,
                  std::uint64_t seed);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<Position> centroids;
  double objective = 0.0;  // within-cluster sum of squared distances
  int iterations = 0;
  /// Objective after each Lloyd iteration of the winning restart, plus one entry
  /// when the Hartigan pass improved on it.
  std::vector<double> objective_trace;
};

struct KMeansOptions {
  int max_iters = 100;
  int restarts = 5;
};

/// k-means++ seeding, Lloyd iterations polished by Hartigan single-point moves,
/// best of `restarts`. Labels are
/// renumbered in order of first appearance by drone index.
KMeansResult kmeans_cluster(std::span<const Position> points, std::size_t k, std::uint64_t seed,
                            KMeansOptions options = {});
KMeansResult kmeans_cluster(const Fleet& fleet, std::size_t k, std::uint64_t seed,
                            KMeansOptions options = {});

/// Within-cluster sum of squared distances for a labeling.
double kmeans_objective(std::span<const Position> points, std::span<const int> labels,
                        std::span<const Position> centroids);

/// Writes cluster labels into the fleet and clears head flags.
void apply_clustering(Fleet& fleet, const KMeansResult& result);

/// Marks, per cluster, the drone nearest its centroid as head (lowest id on ties).
/// With `alive_only`, depleted drones are skipped. Returns head id per cluster (-1 if none).
std::vector<int> select_cluster_heads(Fleet& fleet, std::span<const Position> centroids,
                                      bool alive_only = false);

/// JSON array of {id, x, y, z, cluster, is_head, battery_pct}; battery_pct is a fraction of capacity.
std::string fleet_snapshot_json(const Fleet& fleet);

}  // namespace uavfl
