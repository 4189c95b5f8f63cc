#include "uavfl/strategies.hpp"

#include <algorithm>
#include <cmath>

#include "uavfl/error.hpp"
#include "uavfl/rng.hpp"

namespace uavfl {

namespace {

void train_drone(Simulation& sim, int id, const HyperParams& hp, std::uint64_t seed, int epoch) {
  auto& d = sim.fleet.drones.at(static_cast<std::size_t>(id));
  const auto& part = sim.partition_of(id);
  d.params = client_update(id, d.params, part, hp, client_seed(seed, id, epoch), epoch);
  meter_compute(sim.fleet, id,
                training_seconds(part.size(), hp.local_epochs,
                                 sim.costs.compute.seconds_per_1000_examples),
                epoch, sim.costs.compute, sim.ledger);
}

int live_head(Simulation& sim, int cluster) {
  const auto head = sim.fleet.head(cluster);
  if (!head) throw PlanValidationError("cluster " + std::to_string(cluster) + " has no head");
  return *head;
}

// Re-elects heads that ran out of battery. False when some cluster has no live drone left.
bool prepare_epoch(Simulation& sim) {
  const int clusters = sim.fleet.cluster_count();
  if (clusters == 0) {
    return std::any_of(sim.fleet.drones.begin(), sim.fleet.drones.end(),
                       [](const DroneState& d) { return d.alive(); });
  }
  bool reelect = false;
  for (int c = 0; c < clusters; ++c) {
    if (sim.live_members(c).empty()) return false;
    const auto head = sim.fleet.head(c);
    if (!head || !sim.fleet.drones[static_cast<std::size_t>(*head)].alive()) reelect = true;
  }
  if (reelect) {
    if (sim.centroids.size() != static_cast<std::size_t>(clusters)) {
      throw PlanValidationError("head re-election needs one centroid per cluster");
    }
    select_cluster_heads(sim.fleet, sim.centroids, /*alive_only=*/true);
  }
  return true;
}

ModelParams combine(const ModelParams& server, std::size_t server_samples,
                    const ModelParams& client, std::size_t client_samples,
                    const TrainingPlan& plan) {
  if (plan.weighting == ExchangeWeighting::samples) {
    const WeightedParams parts[] = {{server, server_samples}, {client, client_samples}};
    return fedavg_aggregate(parts);
  }
  if (server == client) return server;
  ModelParams out = server;
  auto v = out.values();
  const auto c = client.values();
  const double lambda = plan.server_weight;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = lambda * v[i] + (1.0 - lambda) * c[i];
  return out;
}

class EvalCache {
 public:
  explicit EvalCache(const Dataset& data) : data_(data) {}
  Evaluation operator()(const ModelParams& w) {
    for (const auto& [p, e] : cache_) {
      if (p == w) return e;
    }
    const Evaluation e = evaluate(w, data_);
    cache_.emplace_back(w, e);
    return e;
  }

 private:
  const Dataset& data_;
  std::vector<std::pair<ModelParams, Evaluation>> cache_;
};

void append_records(const Simulation& sim, const std::string& id, int epoch, Phase phase,
                    std::vector<RoundRecord>& out) {
  EvalCache eval(sim.eval);
  for (const auto& d : sim.fleet.drones) {
    const Evaluation e = eval(d.params);
    RoundRecord r;
    r.run_id = id;
    r.global_epoch = epoch;
    r.drone_id = d.id;
    r.cluster_id = d.cluster_id;
    r.phase = phase;
    r.accuracy = e.accuracy;
    r.loss = e.loss;
    r.battery_pct = std::clamp(d.battery_fraction(), 0.0, 1.0);
    r.bytes_sent = sim.epoch_traffic.sent[static_cast<std::size_t>(d.id)];
    r.bytes_received = sim.epoch_traffic.received[static_cast<std::size_t>(d.id)];
    r.bytes_total = r.bytes_sent + r.bytes_received;
    validate(r);
    out.push_back(std::move(r));
  }
}

template <typename Step>
RunResult drive(Simulation& sim, const TrainingPlan& plan, int expected_clusters, Step step) {
  validate(plan);
  if (expected_clusters > 0 && sim.fleet.cluster_count() != expected_clusters) {
    throw PlanValidationError("method " + std::string(to_string(plan.method)) + " needs " +
                              std::to_string(expected_clusters) + " cluster(s), fleet has " +
                              std::to_string(sim.fleet.cluster_count()));
  }
  RunResult result;
  result.run_id = run_id(plan, sim.fleet.size());
  for (int epoch = 1; epoch <= plan.ge; ++epoch) {
    if (!prepare_epoch(sim)) {
      result.status = RunStatus::partial;
      result.message = "a cluster has no drone with battery left before epoch " + std::to_string(epoch);
      break;
    }
    sim.epoch_traffic.reset();
    Phase phase = Phase::intra;
    try {
      phase = step(epoch, result);
    } catch (const TrainingDivergedError& e) {
      result.status = RunStatus::diverged;
      result.message = e.what();
      break;
    }
    append_records(sim, result.run_id, epoch, phase, result.records);
    result.epochs_completed = epoch;
  }
  for (const auto& d : sim.fleet.drones) {
    if (!d.alive()) result.depleted_drones.push_back(d.id);
  }
  return result;
}

void notify(const RunHooks& hooks, const Simulation& sim, Phase phase, int epoch, int cluster) {
  if (hooks.after_step) hooks.after_step(sim, phase, epoch, cluster);
}

// Exchanges and intra rounds shared by methods C and A. `refresh` retrains the
// heads before exchanging so repeated exchanges in one block carry new work.
Phase two_cluster_step(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks, int epoch,
                       bool exchange, bool refresh, RunResult& result) {
  if (!exchange) {
    for (int c = 0; c < 2; ++c) {
      run_intra_cluster_round(sim, c, plan, epoch);
      notify(hooks, sim, Phase::intra, epoch, c);
    }
    return Phase::intra;
  }
  if (refresh) {
    const HyperParams hp = hyper_params(plan);
    for (int c = 0; c < 2; ++c) train_drone(sim, live_head(sim, c), hp, plan.seed, epoch);
  }
  result.exchanges.push_back(inter_cluster_exchange(sim, plan, epoch));
  notify(hooks, sim, Phase::exchange, epoch, -1);
  return Phase::exchange;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::C:
      return "C";
    case Method::A:
      return "A";
    case Method::One:
      return "One";
    case Method::O:
      return "O";
  }
  return "C";
}

Method parse_method(std::string_view text) {
  if (text == "C") return Method::C;
  if (text == "A") return Method::A;
  if (text == "One") return Method::One;
  if (text == "O") return Method::O;
  throw PlanValidationError("unknown method '" + std::string(text) + "' (expected C, A, One or O)");
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed:
      return "completed";
    case RunStatus::partial:
      return "partial";
    case RunStatus::diverged:
      return "diverged";
  }
  return "completed";
}

void validate(const TrainingPlan& plan) {
  if (plan.le < 1) throw PlanValidationError("le must be >= 1");
  if (plan.ge < 1) throw PlanValidationError("ge must be >= 1");
  if (plan.method == Method::C) {
    if (plan.lr < 1) throw PlanValidationError("method C needs lr >= 1");
    if (plan.gr < 1) throw PlanValidationError("method C needs gr >= 1");
  }
  if (!(plan.server_weight >= 0.0 && plan.server_weight <= 1.0)) {
    throw PlanValidationError("server_weight must be in [0, 1]");
  }
  validate(hyper_params(plan));
}

HyperParams hyper_params(const TrainingPlan& plan) {
  HyperParams hp;
  hp.eta = plan.eta;
  hp.batch_size = plan.batch_size;
  hp.local_epochs = plan.le;
  hp.client_fraction = plan.client_fraction;
  return hp;
}

std::string type_label(const TrainingPlan& plan, std::size_t fleet_size) {
  const std::string n = std::to_string(fleet_size);
  if (plan.method == Method::C) {
    return "C_" + std::to_string(plan.lr) + "lr_" + std::to_string(plan.gr) + "gr_" + n;
  }
  return std::string(to_string(plan.method)) + "_" + n;
}

std::string run_id(const TrainingPlan& plan, std::size_t fleet_size) {
  return type_label(plan, fleet_size) + "_" + std::to_string(plan.seed);
}

const DatasetPartition& Simulation::partition_of(int drone) const {
  const auto& d = fleet.drones.at(static_cast<std::size_t>(drone));
  return partitions.at(static_cast<std::size_t>(d.partition_id));
}

std::uint64_t Simulation::message_bytes() const {
  if (costs.message_bytes) return *costs.message_bytes;
  return fleet.drones.empty() ? 0 : fleet.drones.front().params.wire_bytes();
}

std::vector<int> Simulation::live_members(int cluster) const {
  std::vector<int> ids;
  for (const auto& d : fleet.drones) {
    if (d.cluster_id == cluster && d.alive()) ids.push_back(d.id);
  }
  return ids;
}

std::size_t Simulation::cluster_samples(int cluster) const {
  std::size_t n = 0;
  for (const int id : live_members(cluster)) n += partition_of(id).size();
  return n;
}

Simulation make_simulation(Fleet fleet, std::vector<Position> centroids,
                           std::vector<DatasetPartition> partitions, Dataset eval,
                           const ModelParams& init, SimulationCosts costs) {
  if (partitions.size() != fleet.size()) {
    throw PlanValidationError("need exactly one data partition per drone");
  }
  if (eval.empty()) throw DatasetError("evaluation split is empty");
  for (auto& d : fleet.drones) {
    d.params = init;
    if (d.partition_id < 0) d.partition_id = d.id;
  }
  Simulation sim;
  sim.epoch_traffic = Traffic(fleet.size());
  sim.fleet = std::move(fleet);
  sim.centroids = std::move(centroids);
  sim.partitions = std::move(partitions);
  sim.eval = std::move(eval);
  sim.costs = std::move(costs);
  return sim;
}

std::uint64_t client_seed(std::uint64_t seed, int drone, int epoch) {
  return derive_seed(seed, "client_update", static_cast<std::uint64_t>(drone),
                     static_cast<std::uint64_t>(epoch));
}

IntraRoundResult run_intra_cluster_round(Simulation& sim, int cluster, const TrainingPlan& plan,
                                         int epoch) {
  const int head = live_head(sim, cluster);
  const std::vector<int> members = sim.live_members(cluster);
  if (std::find(members.begin(), members.end(), head) == members.end()) {
    throw PlanValidationError("head of cluster " + std::to_string(cluster) + " is not alive");
  }
  const HyperParams hp = hyper_params(plan);

  IntraRoundResult result;
  result.participants = members;
  if (hp.client_fraction < 1.0) {
    const auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(hp.client_fraction * static_cast<double>(members.size()))));
    Rng rng(derive_seed(plan.seed, "participants", static_cast<std::uint64_t>(cluster),
                        static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<int>(result.participants));
    result.participants.resize(m);
    std::sort(result.participants.begin(), result.participants.end());
  }

  for (const int k : result.participants) train_drone(sim, k, hp, plan.seed, epoch);

  const std::uint64_t bytes = sim.message_bytes();
  std::vector<WeightedParams> contributions;
  contributions.reserve(result.participants.size());
  for (const int k : result.participants) {
    if (k != head) {
      meter_transmission(sim.fleet, k, head, bytes, epoch, sim.costs.channel, sim.ledger,
                         sim.epoch_traffic);
    }
    const auto& d = sim.fleet.drones[static_cast<std::size_t>(k)];
    contributions.push_back({d.params, sim.partition_of(k).size()});
  }
  result.aggregate = fedavg_aggregate(contributions);

  for (const int k : members) {
    if (k != head) {
      meter_transmission(sim.fleet, head, k, bytes, epoch, sim.costs.channel, sim.ledger,
                         sim.epoch_traffic);
    }
    sim.fleet.drones[static_cast<std::size_t>(k)].params = result.aggregate;
  }
  return result;
}

ExchangeOutcome inter_cluster_exchange(Simulation& sim, const TrainingPlan& plan, int epoch) {
  if (sim.fleet.cluster_count() != 2) {
    throw PlanValidationError("inter-cluster exchange needs exactly two clusters");
  }
  const int head_a = live_head(sim, 0);
  const int head_b = live_head(sim, 1);
  const std::uint64_t bytes = sim.message_bytes();
  meter_transmission(sim.fleet, head_a, head_b, bytes, epoch, sim.costs.channel, sim.ledger,
                     sim.epoch_traffic);
  meter_transmission(sim.fleet, head_b, head_a, bytes, epoch, sim.costs.channel, sim.ledger,
                     sim.epoch_traffic);

  const ModelParams agg_a = sim.fleet.drones[static_cast<std::size_t>(head_a)].params;
  const ModelParams agg_b = sim.fleet.drones[static_cast<std::size_t>(head_b)].params;
  const std::size_t n_a = sim.cluster_samples(0);
  const std::size_t n_b = sim.cluster_samples(1);

  // Served by A with B as client, and served by B with A as client.
  ModelParams at_a = combine(agg_a, n_a, agg_b, n_b, plan);
  ModelParams at_b = combine(agg_b, n_b, agg_a, n_a, plan);

  ExchangeOutcome out;
  out.acc_b_to_a = evaluate(at_a, sim.eval).accuracy;
  out.acc_a_to_b = evaluate(at_b, sim.eval).accuracy;
  out.winner = out.acc_a_to_b > out.acc_b_to_a ? 1 : 0;
  out.broadcast_params = out.winner == 0 ? std::move(at_a) : std::move(at_b);

  for (int c = 0; c < 2; ++c) {
    const int head = c == 0 ? head_a : head_b;
    for (const int k : sim.live_members(c)) {
      if (k != head) {
        meter_transmission(sim.fleet, head, k, bytes, epoch, sim.costs.channel, sim.ledger,
                           sim.epoch_traffic);
      }
      sim.fleet.drones[static_cast<std::size_t>(k)].params = out.broadcast_params;
    }
  }
  return out;
}

RunResult run_method_c(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks) {
  if (plan.method != Method::C) throw PlanValidationError("run_method_c needs method C");
  return drive(sim, plan, 2, [&](int epoch, RunResult& result) {
    const int block = plan.lr + plan.gr;
    const int pos = (epoch - 1) % block;
    const bool exchange = pos >= plan.lr;
    return two_cluster_step(sim, plan, hooks, epoch, exchange, exchange && pos > plan.lr, result);
  });
}

RunResult run_method_a(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks) {
  if (plan.method != Method::A) throw PlanValidationError("run_method_a needs method A");
  return drive(sim, plan, 2, [&](int epoch, RunResult& result) {
    return two_cluster_step(sim, plan, hooks, epoch, epoch % 2 == 0, false, result);
  });
}

RunResult run_method_one(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks) {
  if (plan.method != Method::One) throw PlanValidationError("run_method_one needs method One");
  return drive(sim, plan, 1, [&](int epoch, RunResult&) {
    run_intra_cluster_round(sim, 0, plan, epoch);
    notify(hooks, sim, Phase::intra, epoch, 0);
    return Phase::intra;
  });
}

RunResult run_method_o(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks) {
  if (plan.method != Method::O) throw PlanValidationError("run_method_o needs method O");
  const HyperParams hp = hyper_params(plan);
  return drive(sim, plan, 0, [&](int epoch, RunResult&) {
    for (const auto& d : sim.fleet.drones) {
      if (d.alive()) train_drone(sim, d.id, hp, plan.seed, epoch);
    }
    notify(hooks, sim, Phase::local, epoch, -1);
    return Phase::local;
  });
}

RunResult run_method(Simulation& sim, const TrainingPlan& plan, const RunHooks& hooks) {
  switch (plan.method) {
    case Method::C:
      return run_method_c(sim, plan, hooks);
    case Method::A:
      return run_method_a(sim, plan, hooks);
    case Method::One:
      return run_method_one(sim, plan, hooks);
    case Method::O:
      return run_method_o(sim, plan, hooks);
  }
  throw PlanValidationError("unknown method");
}

}  // namespace uavfl
