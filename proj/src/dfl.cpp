#include "uavfl/dfl.hpp"

#include <algorithm>
#include <cmath>

#include "uavfl/error.hpp"
#include "uavfl/rng.hpp"

namespace uavfl {

MixingMatrix::MixingMatrix(std::size_t n, std::vector<double> row_major,
                           std::optional<Adjacency> neighbors)
    : n_(n), c_(std::move(row_major)) {
  if (n_ == 0 || c_.size() != n_ * n_) {
    throw MatrixValidationError("mixing matrix must be N x N with N >= 1");
  }
  if (neighbors && neighbors->size() != n_) {
    throw MatrixValidationError("adjacency size does not match the mixing matrix");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = c_[i * n_ + j];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw MatrixValidationError("mixing weight C[" + std::to_string(i) + "][" +
                                    std::to_string(j) + "] is negative or non-finite");
      }
      if (neighbors && i != j && v > 0.0 && !(*neighbors)[i].at(j)) {
        throw MatrixValidationError("mixing weight between non-neighbors " + std::to_string(i) +
                                    " and " + std::to_string(j));
      }
      row += v;
    }
    if (std::abs(row - 1.0) > 1e-12) {
      throw MatrixValidationError("row " + std::to_string(i) + " of the mixing matrix sums to " +
                                  std::to_string(row));
    }
  }
}

MixingMatrix MixingMatrix::identity(std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) c[i * n + i] = 1.0;
  return MixingMatrix(n, std::move(c));
}

MixingMatrix MixingMatrix::uniform(std::size_t n) {
  return MixingMatrix(n, std::vector<double>(n * n, 1.0 / static_cast<double>(n)));
}

bool MixingMatrix::doubly_stochastic(double tol) const {
  for (std::size_t j = 0; j < n_; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n_; ++i) col += c_[i * n_ + j];
    if (std::abs(col - 1.0) > tol) return false;
  }
  return true;
}

MixingMatrix metropolis_weights(const Adjacency& neighbors) {
  const std::size_t n = neighbors.size();
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (neighbors[i].size() != n) throw MatrixValidationError("adjacency must be square");
    for (std::size_t j = 0; j < n; ++j) {
      if (neighbors[i][j] != neighbors[j][i]) throw MatrixValidationError("adjacency must be symmetric");
      if (i != j && neighbors[i][j]) ++degree[i];
    }
  }
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !neighbors[i][j]) continue;
      const double w = 1.0 / (1.0 + static_cast<double>(std::max(degree[i], degree[j])));
      c[i * n + j] = w;
      off += w;
    }
    c[i * n + i] = 1.0 - off;
  }
  return MixingMatrix(n, std::move(c), neighbors);
}

Adjacency ring_adjacency(std::size_t n) {
  Adjacency a(n, std::vector<bool>(n, false));
  if (n < 2) return a;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    a[i][j] = true;
    a[j][i] = true;
  }
  return a;
}

std::vector<ModelParams> mixing_step(std::span<const ModelParams> x, const MixingMatrix& c) {
  if (x.size() != c.size()) throw MatrixValidationError("mixing matrix size does not match node count");
  std::vector<ModelParams> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].layout() != x.front().layout()) {
      throw AggregationError("mixing inputs have mismatched layouts");
    }
    ModelParams next(x[i].layout(), x[i].bytes_per_value());
    auto acc = next.values();
    // Summing in weight order makes nodes whose columns hold the same weights
    // produce bitwise-equal results from equal inputs.
    std::vector<std::pair<double, std::size_t>> terms;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (c(j, i) != 0.0) terms.emplace_back(c(j, i), j);
    }
    std::sort(terms.begin(), terms.end());
    for (const auto& [w, j] : terms) {
      const auto v = x[j].values();
      for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += w * v[p];
    }
    out.push_back(std::move(next));
  }
  return out;
}

void validate(const DflPlan& plan) {
  if (plan.tau1 < 1) throw PlanValidationError("tau1 must be >= 1");
  if (plan.tau2 < 0) throw PlanValidationError("tau2 must be >= 0");
  if (plan.rounds < 0) throw PlanValidationError("rounds must be >= 0");
  if (plan.total_steps < plan.rounds * (plan.tau1 + plan.tau2)) {
    throw PlanValidationError("total_steps must be >= rounds * (tau1 + tau2)");
  }
  if (plan.hp.eta < 0.0 || plan.hp.batch_size < 1 || plan.hp.local_epochs < 1) {
    throw PlanValidationError("invalid local-update hyperparameters");
  }
}

std::uint64_t dfl_step_seed(std::uint64_t seed, int node, int t) {
  return derive_seed(seed, "dfl_local", static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(t));
}

DflResult run_dfl_schedule(Fleet& fleet, std::span<const DatasetPartition> partitions,
                           const DflPlan& plan, const MixingMatrix& c, const DflCosts& costs,
                           std::uint64_t seed) {
  validate(plan);
  const std::size_t n = fleet.size();
  if (partitions.size() != n || c.size() != n) {
    throw PlanValidationError("fleet, partitions and mixing matrix sizes differ");
  }

  DflResult result;
  result.traffic = Traffic(n);
  result.params.reserve(n);
  for (const auto& d : fleet.drones) result.params.push_back(d.params);

  auto local_step = [&](int t) {
    for (std::size_t i = 0; i < n; ++i) {
      const int node = static_cast<int>(i);
      result.params[i] = client_update(node, result.params[i], partitions[i], plan.hp,
                                       dfl_step_seed(seed, node, t), t);
      meter_compute(fleet, node,
                    training_seconds(partitions[i].size(), plan.hp.local_epochs,
                                     costs.compute.seconds_per_1000_examples),
                    t, costs.compute, result.ledger);
    }
    ++result.local_steps;
  };

  auto mix_step = [&](int t) {
    const std::uint64_t bytes = costs.message_bytes.value_or(result.params.front().wire_bytes());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && c(j, i) > 0.0) {
          meter_transmission(fleet, static_cast<int>(j), static_cast<int>(i), bytes, t,
                             costs.channel, result.ledger, result.traffic);
        }
      }
    }
    result.params = mixing_step(result.params, c);
    ++result.mixing_steps;
  };

  const int tau = plan.tau1 + plan.tau2;
  const int scheduled = plan.rounds * tau;
  for (int t = 1; t <= scheduled; ++t) {
    if ((t - 1) % tau < plan.tau1) {
      local_step(t);
    } else {
      mix_step(t);
    }
  }
  for (int t = scheduled + 1; t <= plan.total_steps; ++t) local_step(t);

  for (std::size_t i = 0; i < n; ++i) fleet.drones[i].params = result.params[i];
  return result;
}

}  // namespace uavfl
