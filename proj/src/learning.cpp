#include "uavfl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "uavfl/error.hpp"
#include "uavfl/rng.hpp"

namespace uavfl {

void validate(const HyperParams& hp) {
  if (!(hp.eta > 0.0) || !std::isfinite(hp.eta)) throw PlanValidationError("eta must be > 0");
  if (hp.batch_size < 1) throw PlanValidationError("batch_size must be >= 1");
  if (hp.local_epochs < 1) throw PlanValidationError("local_epochs must be >= 1");
  if (!(hp.client_fraction > 0.0 && hp.client_fraction <= 1.0)) {
    throw PlanValidationError("client_fraction must be in (0, 1]");
  }
}

ModelParams client_update(int drone, const ModelParams& w, const DatasetPartition& part,
                          const HyperParams& hp, std::uint64_t seed, int round) {
  if (part.empty()) throw DatasetError("client_update on an empty partition");
  if (part.feature_dim() != w.layout().input_dim) {
    throw DatasetError("partition feature dimension does not match the model input");
  }
  ModelParams out = w;
  if (hp.eta == 0.0) return out;

  const std::size_t batch = std::max<std::size_t>(1, hp.batch_size);
  std::vector<std::size_t> order(part.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(out.size());
  Rng rng(seed);
  for (int epoch = 0; epoch < hp.local_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const double loss = loss_and_gradient(out.layout(), out.values(), part,
                                            std::span(order).subspan(start, len), grad);
      if (!std::isfinite(loss)) throw TrainingDivergedError(drone, round, "non-finite loss");
      auto values = out.values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(grad[i])) throw TrainingDivergedError(drone, round, "non-finite gradient");
        values[i] -= hp.eta * grad[i];
      }
    }
  }
  if (!out.all_finite()) throw TrainingDivergedError(drone, round, "non-finite parameters");
  return out;
}

ModelParams fedavg_aggregate(std::span<const WeightedParams> contributions) {
  if (contributions.empty()) throw AggregationError("fedavg needs at least one contribution");
  const ModelParams& first = contributions.front().params.get();
  std::size_t total = 0;
  bool all_same = true;
  for (const auto& c : contributions) {
    const ModelParams& p = c.params.get();
    if (p.layout() != first.layout() || p.size() != first.size() ||
        p.bytes_per_value() != first.bytes_per_value()) {
      throw AggregationError("fedavg contributions have mismatched layouts");
    }
    if (c.samples < 1) throw AggregationError("fedavg contribution with zero samples");
    total += c.samples;
    all_same = all_same && p == first;
  }
  if (all_same) return first;

  std::vector<std::size_t> order(contributions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = contributions[a];
    const auto& cb = contributions[b];
    if (ca.samples != cb.samples) return ca.samples < cb.samples;
    const auto va = ca.params.get().values();
    const auto vb = cb.params.get().values();
    return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
  });

  ModelParams out(first.layout(), first.bytes_per_value());
  auto acc = out.values();
  const double n = static_cast<double>(total);
  for (const std::size_t k : order) {
    const double weight = static_cast<double>(contributions[k].samples) / n;
    const auto v = contributions[k].params.get().values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * v[i];
  }
  return out;
}

Evaluation evaluate(const ModelParams& w, const Dataset& data) {
  if (data.empty()) throw DatasetError("evaluate on an empty dataset");
  const ModelLayout& layout = w.layout();
  std::vector<double> out(layout.outputs);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    forward(layout, w.values(), data.features(r), out);
    if (layout.loss == Loss::cross_entropy) {
      const auto best = std::max_element(out.begin(), out.end()) - out.begin();
      correct += best == data.label(r) ? 1 : 0;
    } else {
      correct += std::llround(out[0]) == std::llround(data.target(r)) ? 1 : 0;
    }
  }
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Evaluation e;
  e.loss = loss_and_gradient(layout, w.values(), data, rows, {});
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return e;
}

double training_seconds(std::size_t examples, int epochs, double seconds_per_1000_examples) {
  return seconds_per_1000_examples * static_cast<double>(examples) / 1000.0 *
         static_cast<double>(std::max(0, epochs));
}

}  // namespace uavfl
