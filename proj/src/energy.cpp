#include "uavfl/energy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "uavfl/error.hpp"
#include "uavfl/format.hpp"

namespace uavfl {

void validate(const ChannelConfig& cfg) {
  if (!(cfg.bandwidth_hz > 0.0)) throw DomainError("bandwidth_hz must be > 0");
  if (!(cfg.ref_distance_m > 0.0)) throw DomainError("ref_distance_m must be > 0");
  if (!(cfg.path_loss_exp > 0.0)) throw DomainError("path_loss_exp must be > 0");
  if (!cfg.ref_gain_db && !(cfg.carrier_hz > 0.0)) throw DomainError("carrier_hz must be > 0");
}

void validate(const ComputePowerConfig& cfg) {
  if (!(cfg.avg_power_w > 0.0)) throw DomainError("avg_power_w must be > 0");
  if (!(cfg.battery_capacity_wh > 0.0)) throw DomainError("battery_capacity_wh must be > 0");
  if (!(cfg.seconds_per_1000_examples >= 0.0)) {
    throw DomainError("seconds_per_1000_examples must be >= 0");
  }
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double reference_loss_db(const ChannelConfig& cfg) {
  if (cfg.ref_gain_db) return *cfg.ref_gain_db;
  const double f = cfg.carrier_unit == FrequencyUnit::ghz ? cfg.carrier_hz / 1e9 : cfg.carrier_hz;
  return 28.0 + 20.0 * std::log10(f);
}

double reference_gain(const ChannelConfig& cfg) {
  return std::pow(10.0, -reference_loss_db(cfg) / 10.0);
}

ComputeEnergy compute_energy(const ComputePowerConfig& p, double t_tr_s) {
  if (!(t_tr_s >= 0.0)) throw DomainError("training time must be >= 0");
  ComputeEnergy e;
  e.energy_wh = p.avg_power_w * t_tr_s / 3600.0;
  e.battery_fraction = e.energy_wh / p.battery_capacity_wh;
  return e;
}

double channel_gain(double d_m, const ChannelConfig& cfg) {
  if (!(d_m > 0.0)) throw DomainError("channel_gain needs a positive distance");
  const double d = std::max(d_m, cfg.ref_distance_m);
  if (d == cfg.ref_distance_m) return reference_gain(cfg);
  return reference_gain(cfg) * std::pow(d / cfg.ref_distance_m, -cfg.path_loss_exp);
}

double noise_power_w(const ChannelConfig& cfg) {
  return dbm_to_watts(cfg.noise_psd_dbm_hz) * cfg.bandwidth_hz;
}

double shannon_rate_bps(double d_m, const ChannelConfig& cfg) {
  const double snr = channel_gain(d_m, cfg) * dbm_to_watts(cfg.tx_power_dbm) / noise_power_w(cfg);
  return cfg.bandwidth_hz * std::log2(1.0 + snr);
}

double min_transmit_time(double s_bits, double d_m, const ChannelConfig& cfg) {
  if (!(s_bits >= 0.0)) throw DomainError("message size must be >= 0");
  if (!(d_m > 0.0)) throw DomainError("transmit distance must be > 0");
  if (s_bits == 0.0) return 0.0;
  const double rate = shannon_rate_bps(d_m, cfg);
  if (!(rate >= 1.0)) {
    throw LinkInfeasibleError("link rate " + format_double(rate) + " bit/s at " +
                              format_double(d_m) + " m");
  }
  return s_bits / rate;
}

double comm_energy(double t_s, const ChannelConfig& cfg) {
  if (!(t_s >= 0.0)) throw DomainError("transmit time must be >= 0");
  return t_s * dbm_to_watts(cfg.tx_power_dbm);
}

double debit_battery_in_place(DroneState& drone, double joules) {
  if (!(joules >= 0.0)) throw DomainError("cannot debit negative energy");
  const double wh = joules / 3600.0;
  double taken = joules;
  if (wh >= drone.battery_remaining_wh) {
    taken = drone.battery_remaining_wh * 3600.0;
    drone.battery_remaining_wh = 0.0;
  } else {
    drone.battery_remaining_wh -= wh;
  }
  if (drone.battery_remaining_wh <= 0.0) drone.depleted = true;
  return taken;
}

DroneState debit_battery(DroneState drone, double joules) {
  debit_battery_in_place(drone, joules);
  return drone;
}

double EnergyLedger::joules_for(int drone) const {
  double total = 0.0;
  for (const auto& e : entries_) {
    if (e.drone == drone) total += e.joules;
  }
  return total;
}

double EnergyLedger::total_joules(EnergyKind kind) const {
  double total = 0.0;
  for (const auto& e : entries_) {
    if (e.kind == kind) total += e.joules;
  }
  return total;
}

void EnergyLedger::write_csv(std::ostream& out) const {
  out << "drone_id,kind,joules,seconds,bytes,peer,round\n";
  for (const auto& e : entries_) {
    out << e.drone << ',' << (e.kind == EnergyKind::compute ? "compute" : "transmit") << ','
        << format_double(e.joules) << ',' << format_double(e.duration_s) << ',' << e.bytes << ','
        << e.peer << ',' << e.round << '\n';
  }
}

std::uint64_t Traffic::total_sent() const {
  std::uint64_t t = 0;
  for (const auto v : sent) t += v;
  return t;
}

std::uint64_t Traffic::total_received() const {
  std::uint64_t t = 0;
  for (const auto v : received) t += v;
  return t;
}

void meter_transmission(Fleet& fleet, int from, int to, std::uint64_t bytes, int round,
                        const ChannelConfig& cfg, EnergyLedger& ledger, Traffic& traffic) {
  auto& sender = fleet.drones.at(static_cast<std::size_t>(from));
  const auto& receiver = fleet.drones.at(static_cast<std::size_t>(to));
  // Co-located drones are priced at the reference distance.
  const double d = std::max(distance(sender.position, receiver.position), cfg.ref_distance_m);
  const double seconds = min_transmit_time(8.0 * static_cast<double>(bytes), d, cfg);
  const double joules = debit_battery_in_place(sender, comm_energy(seconds, cfg));
  ledger.append({from, EnergyKind::transmit, joules, seconds, bytes, to, round});
  traffic.sent.at(static_cast<std::size_t>(from)) += bytes;
  traffic.received.at(static_cast<std::size_t>(to)) += bytes;
}

void meter_compute(Fleet& fleet, int drone, double seconds, int round,
                   const ComputePowerConfig& cfg, EnergyLedger& ledger) {
  auto& d = fleet.drones.at(static_cast<std::size_t>(drone));
  const double joules = debit_battery_in_place(d, cfg.avg_power_w * seconds);
  ledger.append({drone, EnergyKind::compute, joules, seconds, 0, -1, round});
}

}  // namespace uavfl
