#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "uavfl/data.hpp"
#include "uavfl/error.hpp"
#include "uavfl/learning.hpp"
#include "uavfl/model.hpp"
#include "uavfl/rng.hpp"

using namespace uavfl;

namespace {

Dataset scalar_data(std::initializer_list<std::pair<double, double>> rows) {
  Dataset d(1);
  for (const auto& [x, y] : rows) d.add(std::span<const double>(&x, 1), y);
  return d;
}

// Mean loss from raw outputs, written without the library's loss code.
double oracle_loss(const ModelLayout& layout, std::span<const double> w, const Dataset& data) {
  std::vector<double> z(layout.outputs);
  double total = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    forward(layout, w, data.features(r), z);
    if (layout.loss == Loss::cross_entropy) {
      double s = 0.0;
      for (double v : z) s += std::exp(v);
      total += -std::log(std::exp(z[static_cast<std::size_t>(data.label(r))]) / s);
    } else {
      total += 0.5 * (z[0] - data.target(r)) * (z[0] - data.target(r));
    }
  }
  return total / static_cast<double>(data.size());
}

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

TEST_CASE("layout dimension and parameter order") {
  CHECK(ModelLayout{4, 0, 3}.dimension() == 15);
  CHECK(ModelLayout{4, 5, 3}.dimension() == 4 * 5 + 5 + 5 * 3 + 3);
  CHECK(ModelLayout{4, 0, 3, Loss::cross_entropy, false}.dimension() == 12);
  CHECK(ModelLayout{4, 0, 3}.hash() != ModelLayout{3, 0, 4}.hash());
  CHECK_THROWS(ModelParams(ModelLayout{2, 0, 2, Loss::squared_error}));
}

TEST_CASE("serialization round trip and wire size") {
  const ModelLayout layout{3, 2, 2};
  const ModelParams p = init_params(layout, 4, 8);
  const auto bytes = p.serialize();
  CHECK(bytes.size() == p.wire_bytes());
  CHECK(bytes.size() == 16 + 8 * layout.dimension());
  CHECK(bytes[0] == 0x55);  // 'U'
  CHECK(ModelParams::deserialize(bytes, layout) == p);

  const ModelParams p4 = init_params(layout, 4, 4);
  CHECK(p4.wire_bytes() == 16 + 4 * layout.dimension());
  const auto back = ModelParams::deserialize(p4.serialize(), layout);
  for (std::size_t i = 0; i < p4.size(); ++i) {
    CHECK(back[i] == static_cast<double>(static_cast<float>(p4[i])));
  }
  CHECK_THROWS(ModelParams::deserialize(bytes, ModelLayout{2, 2, 2}));
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(77);
  const Dataset blobs = make_blobs({12, 3, 3, 1.0, 0.7}, 5);
  const Dataset line = scalar_data({{0.5, 1.0}, {-1.0, 0.2}, {2.0, -0.7}});
  const std::pair<ModelLayout, const Dataset*> cases[] = {
      {{3, 0, 4}, &blobs}, {{3, 4, 3}, &blobs}, {{1, 3, 1, Loss::squared_error}, &line}};
  for (const auto& [l, data_ptr] : cases) {
    const Dataset& data = *data_ptr;
    REQUIRE(l.dimension() <= 50);
    for (int point = 0; point < 10; ++point) {
      std::vector<double> w(l.dimension());
      for (auto& v : w) v = rng.normal();
      std::vector<double> g(w.size());
      const auto rows = all_rows(data);
      const double loss = loss_and_gradient(l, w, data, rows, g);
      CHECK(loss == doctest::Approx(oracle_loss(l, w, data)).epsilon(1e-12));
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double h = 1e-6;
        auto wp = w, wm = w;
        wp[i] += h;
        wm[i] -= h;
        const double fd = (oracle_loss(l, wp, data) - oracle_loss(l, wm, data)) / (2 * h);
        const double rel = std::abs(fd - g[i]) / std::max(1e-6, std::abs(fd) + std::abs(g[i]));
        CHECK(rel <= 1e-4);
      }
    }
  }
}

TEST_CASE("hand-built cross-entropy loss") {
  // W = [[1],[-1]], b = [0, 0.5]; logits for x are (x, 0.5 - x).
  const ModelLayout layout{1, 0, 2};
  const ModelParams w(layout, {1.0, -1.0, 0.0, 0.5});
  const Dataset data = scalar_data({{0.0, 0}, {1.0, 0}, {-1.0, 1}, {2.0, 1}});
  double expected = 0.0;
  for (auto [x, y] : std::vector<std::pair<double, int>>{{0.0, 0}, {1.0, 0}, {-1.0, 1}, {2.0, 1}}) {
    const double z0 = x, z1 = 0.5 - x;
    const double lse = std::log(std::exp(z0) + std::exp(z1));
    expected += lse - (y == 0 ? z0 : z1);
  }
  expected /= 4.0;
  const Evaluation e = evaluate(w, data);
  CHECK(std::abs(e.loss - expected) < 1e-9);
  // Predictions: 1, 0, 1, 0 against labels 0, 0, 1, 1.
  CHECK(e.accuracy == 0.5);
}

TEST_CASE("evaluate extremes") {
  const ModelLayout layout{1, 0, 2};
  const Dataset data = scalar_data({{1.0, 1}, {-1.0, 0}, {2.0, 1}, {-3.0, 0}});
  CHECK(evaluate(ModelParams(layout, {-1.0, 1.0, 0.0, 0.0}), data).accuracy == 1.0);
  // Always class 1 on balanced binary data.
  CHECK(evaluate(ModelParams(layout, {0.0, 0.0, 0.0, 1.0}), data).accuracy == 0.5);
  CHECK_THROWS_AS(evaluate(ModelParams(layout), Dataset(1)), DatasetError);
}

TEST_CASE("single-example squared error step") {
  // y_hat = a x + b, loss 0.5 (y_hat - y)^2: grad = (e x, e).
  const ModelLayout layout{1, 0, 1, Loss::squared_error};
  const ModelParams w(layout, {0.5, -0.25});
  const Dataset data = scalar_data({{2.0, 3.0}});
  HyperParams hp;
  hp.eta = 0.1;
  hp.batch_size = 1;
  const ModelParams out = client_update(0, w, data, hp, 1);
  const double e = 0.5 * 2.0 - 0.25 - 3.0;
  CHECK(out[0] == doctest::Approx(0.5 - 0.1 * e * 2.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(-0.25 - 0.1 * e).epsilon(1e-15));
  CHECK(w[0] == 0.5);
}

TEST_CASE("client_update is deterministic and eta 0 is the identity") {
  const Dataset data = make_blobs({50, 4, 3, 1.0, 0.5}, 2);
  const ModelParams w = init_params({4, 0, 3}, 9);
  HyperParams hp;
  hp.batch_size = 8;
  hp.local_epochs = 2;
  CHECK(client_update(0, w, data, hp, 5) == client_update(0, w, data, hp, 5));
  CHECK_FALSE(client_update(0, w, data, hp, 5) == client_update(0, w, data, hp, 6));
  hp.eta = 0.0;
  CHECK(client_update(0, w, data, hp, 5) == w);
}

TEST_CASE("divergence is reported with drone and round") {
  const ModelLayout layout{1, 0, 1, Loss::squared_error};
  const Dataset data = scalar_data({{1e200, 1.0}});
  HyperParams hp;
  hp.eta = 1.0;
  try {
    client_update(3, ModelParams(layout, {1.0, 0.0}), data, hp, 1, 7);
    FAIL("expected divergence");
  } catch (const TrainingDivergedError& e) {
    CHECK(e.drone() == 3);
    CHECK(e.round() == 7);
  }
}

TEST_CASE("hyperparameter validation") {
  HyperParams hp;
  CHECK_NOTHROW(validate(hp));
  hp.client_fraction = 0.0;
  CHECK_THROWS_AS(validate(hp), PlanValidationError);
  hp = {};
  hp.batch_size = 0;
  CHECK_THROWS_AS(validate(hp), PlanValidationError);
}

TEST_CASE("fedavg worked example") {
  const ModelLayout layout{1, 0, 1, Loss::squared_error};
  const ModelParams w1(layout, {1.0, 3.0}), w2(layout, {3.0, 7.0});
  const WeightedParams parts[] = {{w1, 1}, {w2, 3}};
  const ModelParams avg = fedavg_aggregate(parts);
  CHECK(avg[0] == 2.5);
  CHECK(avg[1] == 6.0);
}

TEST_CASE("fedavg fixed point, symmetry and errors") {
  const ModelLayout layout{2, 0, 2};
  const ModelParams w = init_params(layout, 3);
  const WeightedParams same[] = {{w, 2}, {w, 7}, {w, 1}};
  CHECK(fedavg_aggregate(same) == w);

  const ModelParams a(layout, {1, 2, 3, 4, 5, 6}), b(layout, {3, 2, 1, 0, -1, -2});
  const WeightedParams equal[] = {{a, 5}, {b, 5}};
  const ModelParams m = fedavg_aggregate(equal);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == (a[i] + b[i]) / 2);

  const ModelParams other(ModelLayout{3, 0, 2});
  const WeightedParams bad[] = {{a, 1}, {other, 1}};
  CHECK_THROWS_AS(fedavg_aggregate(bad), AggregationError);
  const WeightedParams zero[] = {{a, 0}};
  CHECK_THROWS_AS(fedavg_aggregate(zero), AggregationError);
  CHECK_THROWS_AS(fedavg_aggregate({}), AggregationError);
}

TEST_CASE("fedavg matches a direct weighted sum and ignores order") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.uniform_index(31);
    const ModelLayout layout{dim, 0, 2};
    const std::size_t k = 1 + rng.uniform_index(8);
    std::vector<ModelParams> ws;
    std::vector<std::size_t> ns;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> v(layout.dimension());
      for (auto& x : v) x = rng.uniform(-5, 5);
      ws.emplace_back(layout, v);
      ns.push_back(1 + rng.uniform_index(100));
    }
    std::vector<WeightedParams> parts;
    for (std::size_t c = 0; c < k; ++c) parts.push_back({ws[c], ns[c]});
    const ModelParams got = fedavg_aggregate(parts);

    const double n = std::accumulate(ns.begin(), ns.end(), 0.0);
    for (std::size_t i = 0; i < got.size(); ++i) {
      double expected = 0.0;
      for (std::size_t c = 0; c < k; ++c) expected += static_cast<double>(ns[c]) / n * ws[c][i];
      CHECK(std::abs(got[i] - expected) <= 1e-12);
    }
    std::reverse(parts.begin(), parts.end());
    std::swap(parts.front(), parts.back());
    CHECK(fedavg_aggregate(parts) == got);
  }
}

TEST_CASE("averaging one-step models equals one averaged gradient step") {
  Rng rng(31);
  const ModelLayout layout{3, 0, 3};
  const ModelParams w = init_params(layout, 8);
  const double eta = 0.3;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(6);
    std::vector<Dataset> parts;
    for (std::size_t c = 0; c < k; ++c) {
      parts.push_back(make_blobs({5 + rng.uniform_index(30), 3, 3, 1.0, 1.0}, rng.next_u64()));
    }
    HyperParams hp;
    hp.eta = eta;
    hp.batch_size = 1000;
    std::vector<ModelParams> locals;
    for (std::size_t c = 0; c < k; ++c) locals.push_back(client_update(0, w, parts[c], hp, c));
    std::vector<WeightedParams> weighted;
    for (std::size_t c = 0; c < k; ++c) weighted.push_back({locals[c], parts[c].size()});
    const ModelParams averaged = fedavg_aggregate(weighted);

    double n = 0;
    for (const auto& p : parts) n += static_cast<double>(p.size());
    std::vector<double> step(w.size(), 0.0), g(w.size());
    for (const auto& p : parts) {
      loss_and_gradient(layout, w.values(), p, all_rows(p), g);
      for (std::size_t i = 0; i < g.size(); ++i) step[i] += static_cast<double>(p.size()) / n * g[i];
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(std::abs(averaged[i] - (w[i] - eta * step[i])) <= 1e-12);
    }
  }
}

TEST_CASE("training time model") {
  CHECK(training_seconds(500, 3, 1.0) == doctest::Approx(1.5));
  CHECK(training_seconds(0, 3, 1.0) == 0.0);
}
