#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavfl/data.hpp"
#include "uavfl/energy.hpp"
#include "uavfl/fleet.hpp"
#include "uavfl/learning.hpp"
#include "uavfl/metrics.hpp"
#include "uavfl/model.hpp"

namespace uavfl {

/// C: lr intra-cluster rounds then gr evaluated exchanges, repeated.
/// A: one intra-cluster round, one exchange, alternating.
/// One: plain FedAvg with a single head as server.
/// O: local training only.
enum class Method : std::uint8_t { C, A, One, O };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

/// How each exchange direction weighs the two cluster aggregates.
enum class ExchangeWeighting : std::uint8_t {
  samples,  // total cluster sample counts (both directions coincide)
  server,   // server_weight on the receiving head's aggregate
};

struct TrainingPlan {
  Method method = Method::C;
  int le = 3;    // local epochs per drone per round
  int ge = 30;   // global epochs
  int lr = 5;    // intra-cluster rounds per block (method C)
  int gr = 5;    // exchanges per block (method C)
  double eta = 0.005;
  std::size_t batch_size = 32;
  double client_fraction = 1.0;
  ExchangeWeighting weighting = ExchangeWeighting::samples;
  double server_weight = 0.5;
  std::uint64_t seed = 42;

  friend bool operator==(const TrainingPlan&, const TrainingPlan&) = default;
};

/// Throws PlanValidationError on le/ge < 1, lr/gr < 1 for method C, or bad hyperparameters.
void validate(const TrainingPlan& plan);
HyperParams hyper_params(const TrainingPlan& plan);

/// "C_5lr_5gr_20", "A_20", "One_20", "O_20".
std::string type_label(const TrainingPlan& plan, std::size_t fleet_size);
std::string run_id(const TrainingPlan& plan, std::size_t fleet_size);

struct SimulationCosts {
  ChannelConfig channel;
  ComputePowerConfig compute;
  /// Overrides the serialized model size as the message size s.
  std::optional<std::uint64_t> message_bytes;
};

/// Mutable world state driven by the schedulers.
struct Simulation {
  Fleet fleet;
  std::vector<Position> centroids;
  std::vector<DatasetPartition> partitions;  // indexed by DroneState::partition_id
  Dataset eval;
  SimulationCosts costs;
  EnergyLedger ledger;
  Traffic epoch_traffic;

  const DatasetPartition& partition_of(int drone) const;
  std::uint64_t message_bytes() const;
  std::size_t cluster_samples(int cluster) const;  // live members only
  std::vector<int> live_members(int cluster) const;
};

/// Gives every drone `init`, resets traffic and binds partitions (one per drone).
Simulation make_simulation(Fleet fleet, std::vector<Position> centroids,
                           std::vector<DatasetPartition> partitions, Dataset eval,
                           const ModelParams& init, SimulationCosts costs);

/// Seed of drone `drone`'s local training in global epoch `epoch`.
std::uint64_t client_seed(std::uint64_t seed, int drone, int epoch);

struct IntraRoundResult {
  ModelParams aggregate;
  std::vector<int> participants;
};

/// Members train, upload to the head, the head aggregates (itself included)
/// and sends the aggregate back to every live member.
IntraRoundResult run_intra_cluster_round(Simulation& sim, int cluster, const TrainingPlan& plan,
                                         int epoch);

struct ExchangeOutcome {
  int winner = 0;            // cluster whose head served the chosen aggregate
  double acc_a_to_b = 0.0;   // cluster 0 as client, cluster 1 as server
  double acc_b_to_a = 0.0;   // cluster 1 as client, cluster 0 as server
  ModelParams broadcast_params;
};

/// Heads swap aggregates, each forms the aggregate it would serve, both are
/// scored on the evaluation split and the better one (ties: cluster 0) is
/// broadcast to every live drone of both clusters.
ExchangeOutcome inter_cluster_exchange(Simulation& sim, const TrainingPlan& plan, int epoch);

enum class RunStatus : std::uint8_t { completed, partial, diverged };
std::string_view to_string(RunStatus s);

struct RunHooks {
  /// Called after each intra round (cluster id), exchange (-1) and local epoch (-1).
  std::function<void(const Simulation&, Phase, int epoch, int cluster)> after_step;
};

struct RunResult {
  std::string run_id;
  RunStatus status = RunStatus::completed;
  std::string message;  // set when status != completed
  int epochs_completed = 0;
  std::vector<RoundRecord> records;
  std::vector<ExchangeOutcome> exchanges;
  std::vector<int> depleted_drones;
};

RunResult run_method_c(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks = {});
RunResult run_method_a(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks = {});
RunResult run_method_one(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks = {});
RunResult run_method_o(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks = {});
/// Dispatches on plan.method.
RunResult run_method(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks = {});

}  // namespace uavfl
