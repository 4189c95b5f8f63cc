#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include "uavfl/config.hpp"
#include "uavfl/dfl.hpp"
#include "uavfl/energy.hpp"
#include "uavfl/error.hpp"
#include "uavfl/experiment.hpp"
#include "uavfl/fleet.hpp"
#include "uavfl/learning.hpp"
#include "uavfl/metrics.hpp"

namespace py = pybind11;

namespace {

// Plain parameter vectors travel as a bias-free single-output layout of matching size.
uavfl::ModelParams as_params(std::vector<double> values) {
  uavfl::ModelLayout layout;
  layout.input_dim = values.size();
  layout.outputs = 1;
  layout.loss = uavfl::Loss::squared_error;
  layout.bias = false;
  return uavfl::ModelParams(layout, std::move(values));
}

std::vector<double> to_vector(const uavfl::ModelParams& p) {
  return {p.values().begin(), p.values().end()};
}

py::dict summary_dict(const uavfl::RunSummary& s) {
  py::dict d;
  d["type_label"] = s.type_label;
  d["final_accuracy"] = s.final_accuracy;
  d["final_loss"] = s.final_loss;
  d["avg_battery_pct"] = s.avg_battery_pct;
  d["avg_send_gb"] = s.avg_send_gb;
  d["avg_receive_gb"] = s.avg_receive_gb;
  d["avg_sr_gb"] = s.avg_sr_gb;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "UAV fleet decentralized federated learning simulator";

  py::register_exception<uavfl::Error>(m, "UavflError", PyExc_RuntimeError);
  py::register_exception<uavfl::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<uavfl::Position>(m, "Position")
      .def(py::init<>())
      .def(py::init([](double x, double y, double z) { return uavfl::Position{x, y, z}; }),
           py::arg("x"), py::arg("y"), py::arg("z") = 0.0)
      .def_readwrite("x", &uavfl::Position::x)
      .def_readwrite("y", &uavfl::Position::y)
      .def_readwrite("z", &uavfl::Position::z)
      .def("__repr__", [](const uavfl::Position& p) {
        return "Position(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
               std::to_string(p.z) + ")";
      });

  m.def("distance", &uavfl::distance, py::arg("q"), py::arg("q2"));

  py::class_<uavfl::DroneState>(m, "DroneState")
      .def_readonly("id", &uavfl::DroneState::id)
      .def_readonly("position", &uavfl::DroneState::position)
      .def_readonly("battery_capacity_wh", &uavfl::DroneState::battery_capacity_wh)
      .def_readonly("battery_remaining_wh", &uavfl::DroneState::battery_remaining_wh)
      .def_readonly("cluster_id", &uavfl::DroneState::cluster_id)
      .def_readonly("is_head", &uavfl::DroneState::is_head);

  py::class_<uavfl::Fleet>(m, "Fleet")
      .def_readonly("drones", &uavfl::Fleet::drones)
      .def("__len__", &uavfl::Fleet::size)
      .def("members", &uavfl::Fleet::members)
      .def("snapshot_json", [](const uavfl::Fleet& f) { return uavfl::fleet_snapshot_json(f); });

  m.def(
      "spawn_fleet",
      [](std::size_t n, std::pair<double, double> area, double altitude, double capacity_wh,
         std::uint64_t seed) {
        return uavfl::spawn_fleet(n, {area.first, area.second}, altitude, capacity_wh, seed);
      },
      py::arg("n"), py::arg("area") = std::pair<double, double>{10.0, 10.0},
      py::arg("altitude") = 0.0, py::arg("capacity_wh") = 274.0, py::arg("seed") = 0);

  py::class_<uavfl::KMeansResult>(m, "KMeansResult")
      .def_readonly("labels", &uavfl::KMeansResult::labels)
      .def_readonly("centroids", &uavfl::KMeansResult::centroids)
      .def_readonly("objective", &uavfl::KMeansResult::objective)
      .def_readonly("iterations", &uavfl::KMeansResult::iterations);

  m.def(
      "kmeans_cluster",
      [](const std::vector<uavfl::Position>& points, std::size_t k, std::uint64_t seed) {
        return uavfl::kmeans_cluster(points, k, seed);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0);

  m.def(
      "cluster_fleet",
      [](uavfl::Fleet fleet, std::size_t k, std::uint64_t seed) {
        const auto km = uavfl::kmeans_cluster(fleet, k, seed);
        uavfl::apply_clustering(fleet, km);
        uavfl::select_cluster_heads(fleet, km.centroids);
        return fleet;
      },
      py::arg("fleet"), py::arg("k") = 2, py::arg("seed") = 0,
      "Returns a copy of the fleet with K-means clusters and elected heads.");

  m.def(
      "fedavg_aggregate",
      [](const std::vector<std::pair<std::vector<double>, std::size_t>>& contributions) {
        std::vector<uavfl::ModelParams> params;
        params.reserve(contributions.size());
        for (const auto& [values, n] : contributions) params.push_back(as_params(values));
        std::vector<uavfl::WeightedParams> weighted;
        for (std::size_t i = 0; i < params.size(); ++i) {
          weighted.push_back({params[i], contributions[i].second});
        }
        return to_vector(uavfl::fedavg_aggregate(weighted));
      },
      py::arg("contributions"), "Sample-weighted average of (values, n_k) pairs.");

  m.def(
      "mixing_step",
      [](const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& c) {
        std::vector<double> flat;
        for (const auto& row : c) flat.insert(flat.end(), row.begin(), row.end());
        const uavfl::MixingMatrix mix(c.size(), std::move(flat));
        std::vector<uavfl::ModelParams> params;
        for (const auto& v : x) params.push_back(as_params(v));
        std::vector<std::vector<double>> out;
        for (const auto& p : uavfl::mixing_step(params, mix)) out.push_back(to_vector(p));
        return out;
      },
      py::arg("x"), py::arg("c"));

  m.def(
      "metropolis_weights",
      [](const std::vector<std::vector<bool>>& adjacency) {
        const auto mix = uavfl::metropolis_weights(adjacency);
        std::vector<std::vector<double>> out(mix.size(), std::vector<double>(mix.size()));
        for (std::size_t i = 0; i < mix.size(); ++i) {
          for (std::size_t j = 0; j < mix.size(); ++j) out[i][j] = mix(i, j);
        }
        return out;
      },
      py::arg("adjacency"));

  py::class_<uavfl::ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("bandwidth_hz", &uavfl::ChannelConfig::bandwidth_hz)
      .def_readwrite("carrier_hz", &uavfl::ChannelConfig::carrier_hz)
      .def_readwrite("ref_gain_db", &uavfl::ChannelConfig::ref_gain_db)
      .def_readwrite("ref_distance_m", &uavfl::ChannelConfig::ref_distance_m)
      .def_readwrite("path_loss_exp", &uavfl::ChannelConfig::path_loss_exp)
      .def_readwrite("noise_psd_dbm_hz", &uavfl::ChannelConfig::noise_psd_dbm_hz)
      .def_readwrite("tx_power_dbm", &uavfl::ChannelConfig::tx_power_dbm);

  py::class_<uavfl::ComputePowerConfig>(m, "ComputePowerConfig")
      .def(py::init<>())
      .def_readwrite("avg_power_w", &uavfl::ComputePowerConfig::avg_power_w)
      .def_readwrite("battery_capacity_wh", &uavfl::ComputePowerConfig::battery_capacity_wh);

  m.def("reference_gain", &uavfl::reference_gain, py::arg("cfg") = uavfl::ChannelConfig{});
  m.def("channel_gain", &uavfl::channel_gain, py::arg("d_m"), py::arg("cfg") = uavfl::ChannelConfig{});
  m.def("noise_power_w", &uavfl::noise_power_w, py::arg("cfg") = uavfl::ChannelConfig{});
  m.def("shannon_rate_bps", &uavfl::shannon_rate_bps, py::arg("d_m"),
        py::arg("cfg") = uavfl::ChannelConfig{});
  m.def("min_transmit_time", &uavfl::min_transmit_time, py::arg("s_bits"), py::arg("d_m"),
        py::arg("cfg") = uavfl::ChannelConfig{});
  m.def("comm_energy", &uavfl::comm_energy, py::arg("t_s"), py::arg("cfg") = uavfl::ChannelConfig{});
  m.def(
      "compute_energy",
      [](const uavfl::ComputePowerConfig& p, double t_tr) {
        const auto e = uavfl::compute_energy(p, t_tr);
        return std::make_pair(e.energy_wh, e.battery_fraction);
      },
      py::arg("cfg"), py::arg("t_tr_s"), "Returns (energy_wh, battery_fraction).");

  m.def(
      "normalize_config",
      [](const std::string& json_text) { return uavfl::config_to_json(uavfl::parse_config(json_text)); },
      py::arg("json_text"), "Validates a config and returns it with every default filled in.");

  m.def(
      "run_experiment",
      [](const std::string& json_text, bool write_files) {
        const auto cfg = uavfl::parse_config(json_text);
        uavfl::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = uavfl::run_experiment(cfg, write_files);
        }
        py::dict d = summary_dict(r.summary);
        d["status"] = std::string(uavfl::to_string(r.run.status));
        d["epochs_completed"] = r.run.epochs_completed;
        d["records"] = r.run.records.size();
        d["csv_path"] = r.csv_path.string();
        return d;
      },
      py::arg("config_json"), py::arg("write_files") = false);

  m.def(
      "summarize_csv", [](const std::string& path) { return summary_dict(uavfl::summarize(uavfl::read_round_csv(path))); },
      py::arg("path"));
}
