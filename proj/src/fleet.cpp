#include "uavfl/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include "json.hpp"

#include "uavfl/error.hpp"
#include "uavfl/rng.hpp"

namespace uavfl {

namespace {

double squared_distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// D^2-weighted seeding from a given first center.
std::vector<Position> seed_plus_plus(std::span<const Position> points, std::size_t k,
                                     std::size_t first, Rng& rng) {
  std::vector<Position> centroids;
  centroids.reserve(k);
  centroids.push_back(points[first]);
  std::vector<double> best(points.size(), std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      best[i] = std::min(best[i], squared_distance(points[i], centroids.back()));
      total += best[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      // All remaining points coincide with chosen centroids.
      pick = rng.uniform_index(points.size());
    } else {
      double target = rng.uniform() * total;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        target -= best[i];
        if (target < 0.0 && best[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

void assign(std::span<const Position> points, std::span<const Position> centroids,
            std::vector<int>& labels) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    labels[i] = best_c;
  }
}

// Recomputes centroids as label means. Empty clusters take the point farthest
// from its current centroid, which is then relabeled.
void update_centroids(std::span<const Position> points, std::vector<int>& labels,
                      std::vector<Position>& centroids) {
  const std::size_t k = centroids.size();
  for (;;) {
    std::vector<Position> sums(k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[static_cast<std::size_t>(labels[i])];
      s.x += points[i].x;
      s.y += points[i].y;
      s.z += points[i].z;
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
    if (empty == counts.end()) {
      for (std::size_t c = 0; c < k; ++c) {
        const auto n = static_cast<double>(counts[c]);
        centroids[c] = {sums[c].x / n, sums[c].y / n, sums[c].z / n};
      }
      return;
    }
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[static_cast<std::size_t>(labels[i])] <= 1) continue;
      const double d = squared_distance(points[i], centroids[static_cast<std::size_t>(labels[i])]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const auto empty_c = static_cast<std::size_t>(empty - counts.begin());
    centroids[empty_c] = points[far];
    labels[far] = static_cast<int>(empty_c);
  }
}

KMeansResult lloyd(std::span<const Position> points, std::vector<Position> centroids,
                   int max_iters) {
  KMeansResult r;
  r.labels.assign(points.size(), 0);
  r.centroids = std::move(centroids);
  assign(points, r.centroids, r.labels);
  for (int it = 0; it < max_iters; ++it) {
    update_centroids(points, r.labels, r.centroids);
    r.objective_trace.push_back(kmeans_objective(points, r.labels, r.centroids));
    ++r.iterations;
    std::vector<int> next(points.size());
    assign(points, r.centroids, next);
    if (next == r.labels) break;
    r.labels = std::move(next);
  }
  r.objective = r.objective_trace.back();
  return r;
}

// Hartigan single-point moves: relocate a point whenever that lowers the
// objective, accounting for both centroid shifts. The result is still a Lloyd
// fixed point but escapes many of Lloyd's poorer ones.
void hartigan_refine(std::span<const Position> points, KMeansResult& r) {
  const std::size_t k = r.centroids.size();
  std::vector<double> counts(k, 0.0);
  for (int l : r.labels) counts[static_cast<std::size_t>(l)] += 1.0;
  auto shift = [](Position& c, const Position& p, double n_before, double sign) {
    const double n_after = n_before + sign;
    c.x = (c.x * n_before + sign * p.x) / n_after;
    c.y = (c.y * n_before + sign * p.y) / n_after;
    c.z = (c.z * n_before + sign * p.z) / n_after;
  };
  bool moved = true;
  for (int pass = 0; moved && pass < 100; ++pass) {
    moved = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto a = static_cast<std::size_t>(r.labels[i]);
      if (counts[a] <= 1.0) continue;
      const double leave = counts[a] / (counts[a] - 1.0) * squared_distance(points[i], r.centroids[a]);
      std::size_t to = a;
      double best = leave;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double join = counts[b] / (counts[b] + 1.0) * squared_distance(points[i], r.centroids[b]);
        if (join < best * (1.0 - 1e-12)) {
          best = join;
          to = b;
        }
      }
      if (to == a) continue;
      shift(r.centroids[a], points[i], counts[a], -1.0);
      shift(r.centroids[to], points[i], counts[to], 1.0);
      counts[a] -= 1.0;
      counts[to] += 1.0;
      r.labels[i] = static_cast<int>(to);
      moved = true;
    }
  }
  // Recompute exactly so the objective matches the reported centroids.
  update_centroids(points, r.labels, r.centroids);
  const double objective = kmeans_objective(points, r.labels, r.centroids);
  if (objective < r.objective_trace.back()) {
    r.objective_trace.push_back(objective);
    ++r.iterations;
  }
  r.objective = r.objective_trace.back();
}

void canonicalize(KMeansResult& r) {
  const std::size_t k = r.centroids.size();
  std::vector<int> remap(k, -1);
  int next = 0;
  for (int l : r.labels) {
    if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
  }
  for (auto& m : remap) {
    if (m < 0) m = next++;
  }
  std::vector<Position> centroids(k);
  for (std::size_t c = 0; c < k; ++c) centroids[static_cast<std::size_t>(remap[c])] = r.centroids[c];
  r.centroids = std::move(centroids);
  for (auto& l : r.labels) l = remap[static_cast<std::size_t>(l)];
}

}  // namespace

double distance(const Position& q, const Position& q2) { return std::sqrt(squared_distance(q, q2)); }

int Fleet::cluster_count() const {
  int n = 0;
  for (const auto& d : drones) n = std::max(n, d.cluster_id + 1);
  return n;
}

std::vector<int> Fleet::members(int cluster_id) const {
  std::vector<int> ids;
  for (const auto& d : drones) {
    if (d.cluster_id == cluster_id) ids.push_back(d.id);
  }
  return ids;
}

std::optional<int> Fleet::head(int cluster_id) const {
  for (const auto& d : drones) {
    if (d.cluster_id == cluster_id && d.is_head) return d.id;
  }
  return std::nullopt;
}

Fleet spawn_fleet(std::size_t n, Area area, double altitude_m, double capacity_wh,
                  std::uint64_t seed) {
  if (n < 2) throw InvalidFleetError("fleet needs at least 2 drones, got " + std::to_string(n));
  if (!(area.width > 0.0) || !(area.height > 0.0)) {
    throw InvalidFleetError("area dimensions must be positive");
  }
  if (!(capacity_wh > 0.0)) throw InvalidFleetError("battery capacity must be positive");
  if (!(altitude_m >= 0.0) || !std::isfinite(altitude_m)) {
    throw InvalidFleetError("altitude must be finite and non-negative");
  }

  Fleet fleet;
  fleet.area = area;
  fleet.rng_seed = seed;
  Rng rng(derive_seed(seed, "placement"));
  fleet.drones.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DroneState d;
    d.id = static_cast<int>(i);
    d.position.x = rng.uniform(0.0, area.width);
    d.position.y = rng.uniform(0.0, area.height);
    d.position.z = altitude_m;
    d.battery_capacity_wh = capacity_wh;
    d.battery_remaining_wh = capacity_wh;
    d.partition_id = static_cast<int>(i);
    fleet.drones.push_back(std::move(d));
  }
  return fleet;
}

double kmeans_objective(std::span<const Position> points, std::span<const int> labels,
                        std::span<const Position> centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += squared_distance(points[i], centroids[static_cast<std::size_t>(labels[i])]);
  }
  return total;
}

KMeansResult kmeans_cluster(std::span<const Position> points, std::size_t k, std::uint64_t seed,
                            KMeansOptions options) {
  if (k == 0 || k > points.size()) {
    throw InvalidFleetError("k must be in [1, n], got k=" + std::to_string(k) +
                            " for n=" + std::to_string(points.size()));
  }
  if (options.max_iters < 1) throw InvalidFleetError("max_iters must be >= 1");
  const int restarts = std::max(1, options.restarts);

  // Restarts walk distinct first centers from a seeded offset, so small fleets
  // do not spend several restarts on the same start.
  Rng offset_rng(derive_seed(seed, "kmeans-offset"));
  const std::size_t offset = offset_rng.uniform_index(points.size());
  std::optional<KMeansResult> best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, "kmeans", static_cast<std::uint64_t>(r)));
    const std::size_t first = (offset + static_cast<std::size_t>(r)) % points.size();
    auto result = lloyd(points, seed_plus_plus(points, k, first, rng), options.max_iters);
    hartigan_refine(points, result);
    if (!best || result.objective < best->objective) best = std::move(result);
  }
  canonicalize(*best);
  return std::move(*best);
}

KMeansResult kmeans_cluster(const Fleet& fleet, std::size_t k, std::uint64_t seed,
                            KMeansOptions options) {
  std::vector<Position> points;
  points.reserve(fleet.size());
  for (const auto& d : fleet.drones) points.push_back(d.position);
  return kmeans_cluster(points, k, seed, options);
}

void apply_clustering(Fleet& fleet, const KMeansResult& result) {
  if (result.labels.size() != fleet.size()) {
    throw InvalidFleetError("clustering does not match fleet size");
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    fleet.drones[i].cluster_id = result.labels[i];
    fleet.drones[i].is_head = false;
  }
}

std::vector<int> select_cluster_heads(Fleet& fleet, std::span<const Position> centroids,
                                      bool alive_only) {
  std::vector<int> heads(centroids.size(), -1);
  std::vector<double> best(centroids.size(), std::numeric_limits<double>::infinity());
  for (const auto& d : fleet.drones) {
    if (d.cluster_id < 0 || static_cast<std::size_t>(d.cluster_id) >= centroids.size()) continue;
    if (alive_only && !d.alive()) continue;
    const auto c = static_cast<std::size_t>(d.cluster_id);
    const double dist = distance(d.position, centroids[c]);
    if (dist < best[c] || (dist == best[c] && d.id < heads[c])) {
      best[c] = dist;
      heads[c] = d.id;
    }
  }
  for (auto& d : fleet.drones) {
    if (d.cluster_id >= 0 && static_cast<std::size_t>(d.cluster_id) < centroids.size()) {
      d.is_head = heads[static_cast<std::size_t>(d.cluster_id)] == d.id;
    }
  }
  return heads;
}

std::string fleet_snapshot_json(const Fleet& fleet) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : fleet.drones) {
    out.push_back({{"id", d.id},
                   {"x", d.position.x},
                   {"y", d.position.y},
                   {"z", d.position.z},
                   {"cluster", d.cluster_id},
                   {"is_head", d.is_head},
                   {"battery_pct", d.battery_fraction()}});
  }
  return out.dump(2);
}

}  // namespace uavfl
