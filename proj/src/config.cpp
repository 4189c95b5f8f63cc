#include "uavfl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uavfl/error.hpp"

namespace uavfl {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Strict reader over one JSON object: typed lookups plus an unknown-key check.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  Section child(const std::string& key) {
    if (!has(key)) return Section(empty_object(), join(path_, key));
    return Section(raw(key), join(path_, key));
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (v.is_number_unsigned()) {
      out = static_cast<Int>(v.get<std::uint64_t>());
      return;
    }
    if (v.is_number_integer()) {
      const auto i = v.get<std::int64_t>();
      if constexpr (std::is_unsigned_v<Int>) {
        if (i < 0) throw ConfigError(join(path_, key), "expected a non-negative integer");
      }
      out = static_cast<Int>(i);
      return;
    }
    throw ConfigError(join(path_, key), "expected an integer");
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
    out = v.get<std::string>();
  }

  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
    }
  }

 private:
  static const json& empty_object() {
    static const json e = json::object();
    return e;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string weighting_name(ExchangeWeighting w) {
  return w == ExchangeWeighting::samples ? "samples" : "server";
}

template <typename Fn>
void rethrow_as_config(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

ExperimentConfig from_json(const json& root) {
  ExperimentConfig cfg;
  Section top(root, "");
  top.integer("seed", cfg.seed);
  if (top.has("output_dir")) {
    std::string dir;
    top.string("output_dir", dir);
    cfg.output_dir = dir;
  }

  {
    Section s = top.child("fleet");
    s.integer("n", cfg.fleet.n);
    if (s.has("area")) {
      const json& a = s.raw("area");
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw ConfigError("fleet.area", "expected [width, height]");
      }
      cfg.fleet.area = {a[0].get<double>(), a[1].get<double>()};
    }
    s.number("altitude", cfg.fleet.altitude);
    s.number("capacity_wh", cfg.fleet.capacity_wh);
    s.finish();
  }

  {
    Section s = top.child("plan");
    if (s.has("method")) {
      std::string m;
      s.string("method", m);
      rethrow_as_config("plan.method", [&] { cfg.plan.method = parse_method(m); });
    }
    s.integer("le", cfg.plan.le);
    s.integer("ge", cfg.plan.ge);
    s.integer("lr", cfg.plan.lr);
    s.integer("gr", cfg.plan.gr);
    s.number("eta", cfg.plan.eta);
    s.integer("batch_size", cfg.plan.batch_size);
    s.number("client_fraction", cfg.plan.client_fraction);
    if (s.has("exchange_weighting")) {
      std::string w;
      s.string("exchange_weighting", w);
      if (w == "samples") {
        cfg.plan.weighting = ExchangeWeighting::samples;
      } else if (w == "server") {
        cfg.plan.weighting = ExchangeWeighting::server;
      } else {
        throw ConfigError("plan.exchange_weighting", "expected \"samples\" or \"server\"");
      }
    }
    s.number("server_weight", cfg.plan.server_weight);
    s.finish();
  }

  {
    Section s = top.child("model");
    s.integer("hidden", cfg.model.hidden);
    s.integer("bytes_per_value", cfg.model.bytes_per_value);
    if (s.has("paper_model_bytes")) {
      if (s.raw("paper_model_bytes").is_null()) {
        cfg.model.paper_model_bytes.reset();
      } else {
        std::uint64_t b = 0;
        s.integer("paper_model_bytes", b);
        cfg.model.paper_model_bytes = b;
      }
    }
    s.finish();
  }

  {
    Section s = top.child("channel");
    s.number("bandwidth_hz", cfg.channel.bandwidth_hz);
    s.number("carrier_hz", cfg.channel.carrier_hz);
    if (s.has("carrier_unit")) {
      std::string u;
      s.string("carrier_unit", u);
      if (u == "GHz") {
        cfg.channel.carrier_unit = FrequencyUnit::ghz;
      } else if (u == "Hz") {
        cfg.channel.carrier_unit = FrequencyUnit::hz;
      } else {
        throw ConfigError("channel.carrier_unit", "expected \"GHz\" or \"Hz\"");
      }
    }
    if (s.has("ref_gain_db")) {
      if (s.raw("ref_gain_db").is_null()) {
        cfg.channel.ref_gain_db.reset();
      } else {
        double g = 0.0;
        s.number("ref_gain_db", g);
        cfg.channel.ref_gain_db = g;
      }
    }
    s.number("ref_distance_m", cfg.channel.ref_distance_m);
    s.number("path_loss_exp", cfg.channel.path_loss_exp);
    s.number("noise_psd_dbm_hz", cfg.channel.noise_psd_dbm_hz);
    s.number("tx_power_dbm", cfg.channel.tx_power_dbm);
    s.finish();
  }

  {
    Section s = top.child("compute");
    s.number("avg_power_w", cfg.compute.avg_power_w);
    s.number("seconds_per_1000_examples", cfg.compute.seconds_per_1000_examples);
    s.finish();
  }

  {
    Section s = top.child("data");
    s.string("source", cfg.data.source);
    s.integer("per_drone", cfg.data.per_drone);
    s.number("overlap", cfg.data.overlap);
    s.number("eval_fraction", cfg.data.eval_fraction);
    s.integer("total", cfg.data.blobs.total);
    s.integer("dim", cfg.data.blobs.dim);
    s.integer("classes", cfg.data.blobs.classes);
    s.number("center_scale", cfg.data.blobs.center_scale);
    s.number("noise", cfg.data.blobs.noise);
    s.finish();
  }
  top.finish();

  cfg.plan.seed = cfg.seed;
  cfg.compute.battery_capacity_wh = cfg.fleet.capacity_wh;
  validate(cfg);
  return cfg;
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  j["fleet"] = {{"n", cfg.fleet.n},
                {"area", {cfg.fleet.area.width, cfg.fleet.area.height}},
                {"altitude", cfg.fleet.altitude},
                {"capacity_wh", cfg.fleet.capacity_wh}};
  j["plan"] = {{"method", std::string(to_string(cfg.plan.method))},
               {"le", cfg.plan.le},
               {"ge", cfg.plan.ge},
               {"lr", cfg.plan.lr},
               {"gr", cfg.plan.gr},
               {"eta", cfg.plan.eta},
               {"batch_size", cfg.plan.batch_size},
               {"client_fraction", cfg.plan.client_fraction},
               {"exchange_weighting", weighting_name(cfg.plan.weighting)},
               {"server_weight", cfg.plan.server_weight}};
  j["model"] = {{"hidden", cfg.model.hidden}, {"bytes_per_value", cfg.model.bytes_per_value}};
  j["model"]["paper_model_bytes"] =
      cfg.model.paper_model_bytes ? ordered_json(*cfg.model.paper_model_bytes) : ordered_json(nullptr);
  j["channel"] = {{"bandwidth_hz", cfg.channel.bandwidth_hz},
                  {"carrier_hz", cfg.channel.carrier_hz},
                  {"carrier_unit", cfg.channel.carrier_unit == FrequencyUnit::ghz ? "GHz" : "Hz"}};
  j["channel"]["ref_gain_db"] =
      cfg.channel.ref_gain_db ? ordered_json(*cfg.channel.ref_gain_db) : ordered_json(nullptr);
  j["channel"]["ref_distance_m"] = cfg.channel.ref_distance_m;
  j["channel"]["path_loss_exp"] = cfg.channel.path_loss_exp;
  j["channel"]["noise_psd_dbm_hz"] = cfg.channel.noise_psd_dbm_hz;
  j["channel"]["tx_power_dbm"] = cfg.channel.tx_power_dbm;
  j["compute"] = {{"avg_power_w", cfg.compute.avg_power_w},
                  {"seconds_per_1000_examples", cfg.compute.seconds_per_1000_examples}};
  j["data"] = {{"source", cfg.data.source},
               {"per_drone", cfg.data.per_drone},
               {"overlap", cfg.data.overlap},
               {"eval_fraction", cfg.data.eval_fraction},
               {"total", cfg.data.blobs.total},
               {"dim", cfg.data.blobs.dim},
               {"classes", cfg.data.blobs.classes},
               {"center_scale", cfg.data.blobs.center_scale},
               {"noise", cfg.data.blobs.noise}};
  return j;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto& f = cfg.fleet;
  if (f.n < 2) throw ConfigError("fleet.n", "need at least 2 drones");
  if (!(f.area.width > 0.0 && f.area.height > 0.0)) throw ConfigError("fleet.area", "must be positive");
  if (!(f.altitude >= 0.0)) throw ConfigError("fleet.altitude", "must be >= 0");
  if (!(f.capacity_wh > 0.0)) throw ConfigError("fleet.capacity_wh", "must be > 0");

  rethrow_as_config("plan", [&] { validate(cfg.plan); });
  if (cfg.plan.seed != cfg.seed) throw ConfigError("plan", "plan seed must equal the top-level seed");

  if (cfg.model.bytes_per_value != 4 && cfg.model.bytes_per_value != 8) {
    throw ConfigError("model.bytes_per_value", "must be 4 or 8");
  }
  if (cfg.model.paper_model_bytes && *cfg.model.paper_model_bytes == 0) {
    throw ConfigError("model.paper_model_bytes", "must be > 0");
  }
  if (cfg.model.hidden > 10000) throw ConfigError("model.hidden", "too large for a desk-scale model");

  rethrow_as_config("channel", [&] { validate(cfg.channel); });
  rethrow_as_config("compute", [&] { validate(cfg.compute); });
  if (cfg.compute.battery_capacity_wh != cfg.fleet.capacity_wh) {
    throw ConfigError("compute", "battery capacity must match fleet.capacity_wh");
  }

  const auto& d = cfg.data;
  if (d.source.empty()) throw ConfigError("data.source", "must not be empty");
  if (d.per_drone < 1) throw ConfigError("data.per_drone", "must be >= 1");
  if (!(d.overlap >= 0.0 && d.overlap <= 1.0)) throw ConfigError("data.overlap", "must be in [0, 1]");
  if (!(d.eval_fraction > 0.0 && d.eval_fraction < 1.0)) {
    throw ConfigError("data.eval_fraction", "must be in (0, 1)");
  }
  if (d.source == "synthetic") {
    if (d.blobs.dim < 1) throw ConfigError("data.dim", "must be >= 1");
    if (d.blobs.classes < 2) throw ConfigError("data.classes", "must be >= 2");
    if (!(d.blobs.noise >= 0.0)) throw ConfigError("data.noise", "must be >= 0");
    if (!(d.blobs.center_scale > 0.0)) throw ConfigError("data.center_scale", "must be > 0");
  }
  if (cfg.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  if (json_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    root = json::object();
  } else {
    try {
      root = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
  }
  return from_json(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  return to_json(cfg).dump(indent);
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << config_to_json(cfg) << '\n';
  if (!out) throw ConfigError("", "cannot write config " + path.string());
}

ExperimentConfig with_override(const ExperimentConfig& base, const std::string& dotted_key,
                               const std::string& value_json) {
  json j = json::parse(config_to_json(base));
  json value;
  try {
    value = json::parse(value_json);
  } catch (const json::parse_error& e) {
    throw ConfigError(dotted_key, std::string("malformed override value: ") + e.what());
  }
  json* node = &j;
  std::stringstream ss(dotted_key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError(dotted_key, "empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    node = &(*node)[parts[i]];
    if (!node->is_object()) throw ConfigError(dotted_key, "override path crosses a non-object");
  }
  (*node)[parts.back()] = value;
  return from_json(j);
}

}  // namespace uavfl
