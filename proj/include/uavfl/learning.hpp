#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "uavfl/data.hpp"
#include "uavfl/model.hpp"

namespace uavfl {

struct HyperParams {
  double eta = 0.1;             // learning rate
  std::size_t batch_size = 32;  // B
  int local_epochs = 1;         // E (le)
  double client_fraction = 1.0; // C of FedAvg
};

/// Throws PlanValidationError unless eta > 0, batch_size >= 1, local_epochs >= 1
/// and client_fraction in (0, 1].
void validate(const HyperParams& hp);

/// Local minibatch SGD on one client.
///
/// Runs `hp.local_epochs` passes over `part`, each in a fresh seeded shuffle,
/// applying w <- w - eta * grad(batch) per batch. `w` is not modified. A
/// non-finite loss or gradient raises TrainingDivergedError tagged with
/// (`drone`, `round`).
ModelParams client_update(int drone, const ModelParams& w, const DatasetPartition& part,
                          const HyperParams& hp, std::uint64_t seed, int round = 0);

struct WeightedParams {
  std::reference_wrapper<const ModelParams> params;
  std::size_t samples;  // n_k
};

/// Sample-weighted average sum_k (n_k / n) w_k.
///
/// The sum is taken in a canonical order, so the result is bitwise independent
/// of input order; identical inputs return that input unchanged.
ModelParams fedavg_aggregate(std::span<const WeightedParams> contributions);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Accuracy is argmax == label for cross-entropy models, and
/// round(prediction) == round(target) for squared-error models.
Evaluation evaluate(const ModelParams& w, const Dataset& data);

/// Training time model used for compute energy: seconds for `examples` x `epochs`.
double training_seconds(std::size_t examples, int epochs, double seconds_per_1000_examples);

}  // namespace uavfl
