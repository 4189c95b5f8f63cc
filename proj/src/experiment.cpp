#include "uavfl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "uavfl/error.hpp"
#include "uavfl/format.hpp"
#include "uavfl/log.hpp"
#include "uavfl/rng.hpp"

namespace uavfl {

namespace {

struct PreparedData {
  std::vector<DatasetPartition> partitions;
  Dataset eval;
  ModelLayout layout;
};

PreparedData prepare_data(const ExperimentConfig& cfg) {
  Dataset source;
  if (cfg.data.source == "synthetic") {
    BlobSpec spec = cfg.data.blobs;
    if (spec.total == 0) {
      const double needed = static_cast<double>(cfg.fleet.n * cfg.data.per_drone) /
                            (1.0 - cfg.data.eval_fraction);
      spec.total = static_cast<std::size_t>(std::ceil(needed)) + 1;
    }
    source = make_blobs(spec, derive_seed(cfg.seed, "data"));
  } else {
    source = load_csv_dataset(cfg.data.source);
  }
  EvalSplit split = split_eval(source, cfg.data.eval_fraction, derive_seed(cfg.seed, "eval"));

  PreparedData out;
  out.partitions = partition_dataset(split.train, cfg.fleet.n, cfg.data.per_drone, cfg.data.overlap,
                                     derive_seed(cfg.seed, "partition"));
  out.eval = std::move(split.eval);
  out.layout.input_dim = source.feature_dim();
  out.layout.hidden = cfg.model.hidden;
  out.layout.outputs = std::max<std::size_t>(2, source.class_count());
  out.layout.loss = Loss::cross_entropy;
  return out;
}

std::string canonical_overrides(std::vector<std::pair<std::string, std::string>> kv) {
  std::sort(kv.begin(), kv.end());
  std::string out;
  for (const auto& [k, v] : kv) {
    if (!out.empty()) out += ';';
    out += k + "=" + nlohmann::json::parse(v).dump();
  }
  return out;
}

std::string directory_name(const std::string& overrides) {
  std::string out;
  for (const char c : overrides) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '.' || c == '-' || c == '_';
    out += keep ? c : (c == ';' ? '+' : '_');
  }
  return out.empty() ? "base" : out;
}

}  // namespace

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::completed:
      return kExitOk;
    case RunStatus::partial:
      return kExitPartial;
    case RunStatus::diverged:
      return kExitDiverged;
  }
  return kExitFailure;
}

Simulation build_simulation(const ExperimentConfig& cfg) {
  validate(cfg);
  Fleet fleet = spawn_fleet(cfg.fleet.n, cfg.fleet.area, cfg.fleet.altitude, cfg.fleet.capacity_wh,
                            derive_seed(cfg.seed, "fleet"));
  const std::size_t k = cfg.plan.method == Method::One ? 1 : 2;
  const KMeansResult km = kmeans_cluster(fleet, k, derive_seed(cfg.seed, "kmeans"));
  apply_clustering(fleet, km);
  select_cluster_heads(fleet, km.centroids);

  PreparedData data = prepare_data(cfg);
  const ModelParams init =
      init_params(data.layout, derive_seed(cfg.seed, "init"), cfg.model.bytes_per_value);
  SimulationCosts costs{cfg.channel, cfg.compute, cfg.model.paper_model_bytes};
  return make_simulation(std::move(fleet), km.centroids, std::move(data.partitions),
                         std::move(data.eval), init, std::move(costs));
}

Evaluation centralized_reference(const ExperimentConfig& cfg) {
  validate(cfg);
  PreparedData data = prepare_data(cfg);
  const Dataset pooled = Dataset::concat(data.partitions);
  HyperParams hp = hyper_params(cfg.plan);
  hp.local_epochs = cfg.plan.ge * cfg.plan.le;
  const ModelParams init =
      init_params(data.layout, derive_seed(cfg.seed, "init"), cfg.model.bytes_per_value);
  const ModelParams trained = client_update(-1, init, pooled, hp, derive_seed(cfg.seed, "central"));
  return evaluate(trained, data.eval);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  Simulation sim = build_simulation(cfg);
  ExperimentResult result;
  result.type_label = type_label(cfg.plan, cfg.fleet.n);
  log::info("run " + run_id(cfg.plan, cfg.fleet.n) + ": " + std::to_string(cfg.fleet.n) +
            " drones, message " + std::to_string(sim.message_bytes()) + " bytes");

  result.run = run_method(sim, cfg.plan);
  if (!result.run.records.empty()) result.summary = summarize(result.run.records);
  result.summary.type_label = result.type_label;
  result.ledger = std::move(sim.ledger);
  result.final_fleet = std::move(sim.fleet);
  log::info("run " + result.run.run_id + " " + std::string(to_string(result.run.status)) + " after " +
            std::to_string(result.run.epochs_completed) + " epochs");
  if (!result.run.message.empty()) log::info(result.run.message);

  if (!write_files) return result;

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw SinkError("cannot create output directory " + cfg.output_dir.string());
  const std::string stem = result.type_label + "_" + std::to_string(cfg.seed);
  result.csv_path = cfg.output_dir / (stem + ".csv");
  result.summary_path = cfg.output_dir / (stem + "_summary.json");
  result.fleet_path = cfg.output_dir / (stem + "_fleet.json");
  result.ledger_path = cfg.output_dir / (stem + "_energy.csv");

  {
    CsvRecordSink sink(result.csv_path);
    for (const auto& r : result.run.records) record_round(sink, r);
    sink.flush();
  }
  auto write_text = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text << '\n';
    if (!out) throw SinkError("cannot write " + p.string());
  };
  write_text(result.summary_path, summary_file_json(result));
  write_text(result.fleet_path, fleet_snapshot_json(result.final_fleet));
  {
    std::ofstream out(result.ledger_path);
    result.ledger.write_csv(out);
    if (!out) throw SinkError("cannot write " + result.ledger_path.string());
  }
  return result;
}

std::string summary_file_json(const ExperimentResult& result) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(summary_to_json(result.summary));
  j["status"] = std::string(to_string(result.run.status));
  j["epochs_completed"] = result.run.epochs_completed;
  j["depleted_drones"] = result.run.depleted_drones;
  return j.dump(2);
}

SweepGrid parse_grid(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("grid", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("grid", "expected an object");
  SweepGrid grid;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "grid") {
      if (!it->is_object()) throw ConfigError("grid.grid", "expected an object of arrays");
      for (auto axis = it->begin(); axis != it->end(); ++axis) {
        if (!axis->is_array() || axis->empty()) {
          throw ConfigError("grid.grid." + axis.key(), "expected a non-empty array");
        }
        std::vector<std::string> values;
        for (const auto& v : *axis) values.push_back(v.dump());
        grid.axes.emplace_back(axis.key(), std::move(values));
      }
    } else if (it.key() == "cases") {
      if (!it->is_array()) throw ConfigError("grid.cases", "expected an array of objects");
      for (const auto& c : *it) {
        if (!c.is_object()) throw ConfigError("grid.cases", "expected an array of objects");
        std::vector<std::pair<std::string, std::string>> kv;
        for (auto e = c.begin(); e != c.end(); ++e) kv.emplace_back(e.key(), e->dump());
        grid.cases.push_back(std::move(kv));
      }
    } else {
      throw ConfigError("grid." + it.key(), "unknown key");
    }
  }
  if (grid.axes.empty() && grid.cases.empty()) throw ConfigError("grid", "grid is empty");
  return grid;
}

SweepGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("grid", "cannot open grid " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid(ss.str());
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepGrid& grid,
                                bool write_files) {
  std::vector<std::vector<std::pair<std::string, std::string>>> points = grid.cases;
  if (!grid.axes.empty()) {
    std::vector<std::vector<std::pair<std::string, std::string>>> cart{{}};
    for (const auto& [key, values] : grid.axes) {
      std::vector<std::vector<std::pair<std::string, std::string>>> next;
      for (const auto& prefix : cart) {
        for (const auto& v : values) {
          auto p = prefix;
          p.emplace_back(key, v);
          next.push_back(std::move(p));
        }
      }
      cart = std::move(next);
    }
    points.insert(points.end(), cart.begin(), cart.end());
  }
  if (points.empty()) throw ConfigError("grid", "grid is empty");

  std::vector<SweepRow> rows;
  for (const auto& point : points) {
    SweepRow row;
    row.overrides = canonical_overrides(point);
    try {
      ExperimentConfig cfg = base;
      for (const auto& [k, v] : point) cfg = with_override(cfg, k, v);
      cfg.output_dir = base.output_dir / directory_name(row.overrides);
      const ExperimentResult r = run_experiment(cfg, write_files);
      row.summary = r.summary;
      row.status = r.run.status;
      row.message = r.run.message;
    } catch (const std::exception& e) {
      row.failed = true;
      row.message = e.what();
      log::info("sweep point " + row.overrides + " failed: " + e.what());
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.summary.type_label != b.summary.type_label) return a.summary.type_label < b.summary.type_label;
    return a.overrides < b.overrides;
  });

  if (write_files) {
    std::filesystem::create_directories(base.output_dir);
    std::ofstream csv(base.output_dir / "sweep_summary.csv");
    csv << sweep_table_csv(rows);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      auto j = nlohmann::ordered_json::parse(summary_to_json(r.summary));
      j["overrides"] = r.overrides;
      j["status"] = r.failed ? "failed" : std::string(to_string(r.status));
      if (!r.message.empty()) j["message"] = r.message;
      arr.push_back(std::move(j));
    }
    std::ofstream json_out(base.output_dir / "sweep_summary.json");
    json_out << arr.dump(2) << '\n';
    if (!csv || !json_out) throw SinkError("cannot write sweep summary");
  }
  return rows;
}

std::string sweep_table_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "type_label,final_accuracy,final_loss,avg_battery_pct,avg_send_gb,avg_receive_gb,avg_sr_gb,"
         "status,overrides\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out << s.type_label << ',' << format_double(s.final_accuracy) << ','
        << format_double(s.final_loss) << ',' << format_double(s.avg_battery_pct) << ','
        << format_double(s.avg_send_gb) << ',' << format_double(s.avg_receive_gb) << ','
        << format_double(s.avg_sr_gb) << ','
        << (r.failed ? std::string("failed") : std::string(to_string(r.status))) << ",\"";
    for (char ch : r.overrides) out << (ch == '"' ? "\"\"" : std::string(1, ch));
    out << "\"\n";
  }
  return out.str();
}

}  // namespace uavfl
