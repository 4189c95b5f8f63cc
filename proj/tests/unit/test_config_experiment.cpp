#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "sim_fixtures.hpp"
#include "uavfl/error.hpp"
#include "uavfl/experiment.hpp"

using namespace uavfl;
using uavfl::testing::small_config;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("uavfl_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<none>";
}

// (lr, gr) pairs of the method comparison table.
const std::vector<std::pair<int, int>> kTableRows{{5, 5}, {5, 15}, {5, 10}, {15, 5}, {10, 5}};

}  // namespace

TEST_CASE("empty config gives the simulation defaults") {
  const ExperimentConfig cfg = parse_config("");
  CHECK(cfg == parse_config("{}"));
  CHECK(cfg.fleet.capacity_wh == 274.0);
  CHECK(cfg.compute.battery_capacity_wh == 274.0);
  CHECK(cfg.channel.bandwidth_hz == 20e6);
  CHECK(cfg.channel.carrier_hz == 2e9);
  CHECK(cfg.channel.path_loss_exp == 2.2);
  CHECK(cfg.channel.noise_psd_dbm_hz == -174.0);
  CHECK(cfg.channel.tx_power_dbm == 10.0);
  CHECK(cfg.plan.ge == 30);
  CHECK(cfg.fleet.area.width == 10.0);
  CHECK(cfg.model.bytes_per_value == 4);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error_key(R"({"plan": {"method": "C", "lr": 0}})") == "plan");
  CHECK(config_error_key(R"({"plan": {"lrr": 5}})") == "plan.lrr");
  CHECK(config_error_key(R"({"colour": 1})") == "colour");
  CHECK(config_error_key(R"({"fleet": {"n": 1}})") == "fleet.n");
  CHECK(config_error_key(R"({"fleet": {"n": -3}})") == "fleet.n");
  CHECK(config_error_key(R"({"plan": {"eta": "fast"}})") == "plan.eta");
  CHECK(config_error_key(R"({"channel": {"carrier_unit": "MHz"}})") == "channel.carrier_unit");
  CHECK(config_error_key(R"({"channel": {"bandwidth_hz": 0}})") == "channel");
  CHECK(config_error_key(R"({"plan": {"method": "Z"}})") == "plan.method");
  CHECK(config_error_key("{not json") == "");
  CHECK_THROWS_AS(parse_config(R"({"plan": {"lr": 0}})"), ConfigError);
}

TEST_CASE("config round trips through JSON and files") {
  ExperimentConfig cfg = parse_config(R"({
    "seed": 7,
    "fleet": {"n": 12, "area": [20, 15], "altitude": 5, "capacity_wh": 100},
    "plan": {"method": "A", "le": 2, "ge": 10, "eta": 0.01, "exchange_weighting": "server",
             "server_weight": 0.7},
    "model": {"hidden": 8, "paper_model_bytes": 45000000},
    "channel": {"ref_gain_db": 40, "carrier_unit": "Hz"},
    "data": {"per_drone": 30, "overlap": 0.25}
  })");
  CHECK(cfg.plan.seed == 7);
  CHECK(cfg.compute.battery_capacity_wh == 100.0);
  CHECK(cfg.model.paper_model_bytes == 45000000u);
  CHECK(parse_config(config_to_json(cfg)) == cfg);

  const auto path = scratch("config_roundtrip.json");
  save_config(cfg, path);
  CHECK(load_config(path) == cfg);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("dotted overrides") {
  const ExperimentConfig base = parse_config("{}");
  const ExperimentConfig c = with_override(base, "plan.lr", "10");
  CHECK(c.plan.lr == 10);
  CHECK(with_override(base, "seed", "5").plan.seed == 5);
  CHECK(with_override(base, "plan.method", "\"One\"").plan.method == Method::One);
  CHECK_THROWS_AS(with_override(base, "plan.nope", "1"), ConfigError);
  CHECK_THROWS_AS(with_override(base, "plan.lr", "{oops"), ConfigError);
}

TEST_CASE("method O on two drones is quick and silent") {
  auto cfg = small_config(2, Method::O, 3);
  const auto r = run_experiment(cfg, false);
  CHECK(r.run.status == RunStatus::completed);
  CHECK(r.summary.avg_sr_gb == 0.0);
  CHECK(r.type_label == "O_2");
}

TEST_CASE("default run is labeled like the comparison table") {
  ExperimentConfig cfg = parse_config("{}");
  cfg.plan.ge = 2;
  const auto r = run_experiment(cfg, false);
  CHECK(r.summary.type_label == "C_5lr_5gr_20");
  CHECK(r.run.records.size() == 40);
}

TEST_CASE("method One clusters everyone under one head") {
  const auto cfg = small_config(6, Method::One, 2);
  const Simulation sim = build_simulation(cfg);
  CHECK(sim.fleet.cluster_count() == 1);
  CHECK(sim.fleet.head(0).has_value());
}

TEST_CASE("paper-scale message size drives byte totals") {
  auto cfg = small_config(4, Method::One, 1);
  cfg.model.paper_model_bytes = 45'000'000;
  const auto r = run_experiment(cfg, false);
  CHECK(r.summary.avg_send_gb == doctest::Approx(2.0 * 3 * 0.045 / 4));
}

TEST_CASE("runs write four artifacts and repeat byte for byte") {
  auto cfg = small_config(6, Method::C, 5);
  cfg.output_dir = scratch("determinism_a");
  const auto a = run_experiment(cfg, true);
  auto cfg_b = cfg;
  cfg_b.output_dir = scratch("determinism_b");
  const auto b = run_experiment(cfg_b, true);
  for (const auto& [pa, pb] : {std::pair{a.csv_path, b.csv_path}, std::pair{a.summary_path, b.summary_path},
                               std::pair{a.fleet_path, b.fleet_path}, std::pair{a.ledger_path, b.ledger_path}}) {
    REQUIRE(std::filesystem::exists(pa));
    CHECK(slurp(pa) == slurp(pb));
  }
  CHECK(a.csv_path.filename() == "C_2lr_1gr_6_42.csv");
  CHECK(a.summary_path.filename() == "C_2lr_1gr_6_42_summary.json");
  const auto fleet = nlohmann::json::parse(slurp(a.fleet_path));
  CHECK(fleet.size() == 6);

  auto other = cfg;
  other.seed = other.plan.seed = 43;
  other.output_dir = scratch("determinism_c");
  const auto c = run_experiment(other, true);
  CHECK(slurp(c.csv_path) != slurp(a.csv_path));
  for (const auto& d : {cfg.output_dir, cfg_b.output_dir, other.output_dir}) std::filesystem::remove_all(d);
}

TEST_CASE("centralized reference learns the synthetic task") {
  auto cfg = small_config(6, Method::C, 10);
  const Evaluation e = centralized_reference(cfg);
  CHECK(e.accuracy > 0.5);
}

TEST_CASE("grid parsing") {
  const SweepGrid g = parse_grid(R"({"grid": {"plan.lr": [5, 10]}, "cases": [{"fleet.n": 10}]})");
  REQUIRE(g.axes.size() == 1);
  CHECK(g.axes[0].second.size() == 2);
  CHECK(g.cases.size() == 1);
  CHECK_THROWS_AS(parse_grid("{}"), ConfigError);
  CHECK_THROWS_AS(parse_grid(R"({"grid": {"plan.lr": []}})"), ConfigError);
  CHECK_THROWS_AS(parse_grid(R"({"axes": {}})"), ConfigError);
}

TEST_CASE("a one-point sweep matches a single run") {
  auto base = small_config(6, Method::C, 4);
  base.output_dir = scratch("sweep_one");
  const auto rows = run_sweep(base, parse_grid(R"({"grid": {"plan.lr": [2]}})"), true);
  REQUIRE(rows.size() == 1);
  const auto single = run_experiment(base, false);
  CHECK(rows[0].summary == single.summary);
  CHECK(std::filesystem::exists(base.output_dir / "sweep_summary.csv"));
  CHECK(std::filesystem::exists(base.output_dir / "sweep_summary.json"));
  std::filesystem::remove_all(base.output_dir);
}

TEST_CASE("the comparison-table grid yields ten labeled rows in any order") {
  auto base = small_config(10, Method::C, 3);
  std::string table = R"({"cases": [)";
  bool first = true;
  for (int n : {10, 20}) {
    for (auto [lr, gr] : kTableRows) {
      table += (first ? "" : ",") + std::string(R"({"fleet.n": )") + std::to_string(n) +
               R"(, "plan.lr": )" + std::to_string(lr) + R"(, "plan.gr": )" + std::to_string(gr) + "}";
      first = false;
    }
  }
  table += "]}";
  const auto rows = run_sweep(base, parse_grid(table), false);
  REQUIRE(rows.size() == 10);
  const std::set<std::string> want{"C_5lr_5gr_10",  "C_5lr_5gr_20",  "C_5lr_15gr_10", "C_5lr_15gr_20",
                                   "C_5lr_10gr_10", "C_5lr_10gr_20", "C_15lr_5gr_10", "C_15lr_5gr_20",
                                   "C_10lr_5gr_10", "C_10lr_5gr_20"};
  std::set<std::string> got;
  for (const auto& r : rows) {
    got.insert(r.summary.type_label);
    CHECK_FALSE(r.failed);
  }
  CHECK(got == want);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].summary.type_label <= rows[i].summary.type_label);

  std::string reversed = R"({"cases": [)";
  first = true;
  for (int n : {20, 10}) {
    for (auto [lr, gr] : std::vector(kTableRows.rbegin(), kTableRows.rend())) {
      reversed += (first ? "" : ",") + std::string(R"({"plan.gr": )") + std::to_string(gr) +
                  R"(, "plan.lr": )" + std::to_string(lr) + R"(, "fleet.n": )" + std::to_string(n) + "}";
      first = false;
    }
  }
  reversed += "]}";
  const auto rows_rev = run_sweep(base, parse_grid(reversed), false);
  REQUIRE(rows_rev.size() == rows.size());
  CHECK(sweep_table_csv(rows_rev) == sweep_table_csv(rows));
}

TEST_CASE("a failing sweep point is recorded and the sweep continues") {
  auto base = small_config(4, Method::C, 2);
  const auto rows = run_sweep(base, parse_grid(R"({"grid": {"plan.lr": [0, 2]}})"), false);
  REQUIRE(rows.size() == 2);
  int failed = 0;
  for (const auto& r : rows) failed += r.failed;
  CHECK(failed == 1);
  CHECK(sweep_table_csv(rows).find("failed") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(RunStatus::completed) == 0);
  CHECK(exit_code(RunStatus::partial) != 0);
  CHECK(exit_code(RunStatus::diverged) != exit_code(RunStatus::partial));
}
