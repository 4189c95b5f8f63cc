#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uavfl/data.hpp"
#include "uavfl/energy.hpp"
#include "uavfl/fleet.hpp"
#include "uavfl/learning.hpp"

namespace uavfl {

/// Symmetric neighbor relation over N nodes; self-loops are implicit.
using Adjacency = std::vector<std::vector<bool>>;

/// Row-stochastic N x N matrix. Node i receives sum_j C[j][i] * w_j, i.e. the
/// columns act on the stacked parameters (X_{t+1} = X_t C with one column per node).
class MixingMatrix {
 public:
  /// Validates non-negativity, unit row sums (to 1e-12) and, when an adjacency
  /// is given, that off-diagonal weight only sits on declared neighbors.
  MixingMatrix(std::size_t n, std::vector<double> row_major,
               std::optional<Adjacency> neighbors = std::nullopt);

  static MixingMatrix identity(std::size_t n);
  static MixingMatrix uniform(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return c_[i * n_ + j]; }
  bool doubly_stochastic(double tol = 1e-12) const;

 private:
  std::size_t n_;
  std::vector<double> c_;
};

/// Metropolis-Hastings weights: C[i][j] = 1 / (1 + max(deg i, deg j)) on edges,
/// diagonal takes the remainder. Doubly stochastic for any undirected graph.
MixingMatrix metropolis_weights(const Adjacency& neighbors);

/// Ring adjacency over n nodes.
Adjacency ring_adjacency(std::size_t n);

std::vector<ModelParams> mixing_step(std::span<const ModelParams> x, const MixingMatrix& c);

struct DflPlan {
  int tau1 = 1;        // local-update steps per round
  int tau2 = 1;        // mixing steps per round
  int rounds = 1;      // K
  int total_steps = 2; // T, must be >= K (tau1 + tau2)
  HyperParams hp;      // local_epochs is the number of passes per local step
};

void validate(const DflPlan& plan);

struct DflCosts {
  ChannelConfig channel;
  ComputePowerConfig compute;
  /// Overrides the serialized model size as the message size.
  std::optional<std::uint64_t> message_bytes;
};

struct DflResult {
  std::vector<ModelParams> params;
  Traffic traffic;
  EnergyLedger ledger;
  int local_steps = 0;
  int mixing_steps = 0;
};

/// Seed used for node `node`'s local step at step index `t` (1-based).
std::uint64_t dfl_step_seed(std::uint64_t seed, int node, int t);

/// K rounds of (tau1 local steps, tau2 mixing steps), then local steps up to T.
///
/// Starts from each drone's `params`, writes the final parameters back into the
/// fleet, and meters compute energy for local steps and one message per
/// nonzero off-diagonal C[j][i] (j sends to i) for each mixing step.
DflResult run_dfl_schedule(Fleet& fleet, std::span<const DatasetPartition> partitions,
                           const DflPlan& plan, const MixingMatrix& c, const DflCosts& costs,
                           std::uint64_t seed);

}  // namespace uavfl
