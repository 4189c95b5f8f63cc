#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "uavfl/fleet.hpp"

namespace uavfl {

enum class FrequencyUnit : std::uint8_t { ghz, hz };

/// Radio constants of the communication energy model. Defaults are the
/// simulation setting: 20 MHz, 2 GHz carrier, alpha 2.2, -174 dBm/Hz, 10 dBm.
struct ChannelConfig {
  double bandwidth_hz = 20e6;
  double carrier_hz = 2e9;
  /// Reference path loss at d0 in dB. When unset it is 28 + 20 log10(f_c),
  /// with f_c expressed in `carrier_unit`.
  std::optional<double> ref_gain_db;
  FrequencyUnit carrier_unit = FrequencyUnit::ghz;
  double ref_distance_m = 1.0;
  double path_loss_exp = 2.2;
  double noise_psd_dbm_hz = -174.0;
  double tx_power_dbm = 10.0;

  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

void validate(const ChannelConfig& cfg);

struct ComputePowerConfig {
  double avg_power_w = 100.0;          // P_avg
  double battery_capacity_wh = 274.0;  // E_d
  /// Simulated wall time of one epoch over 1000 examples.
  double seconds_per_1000_examples = 1.0;

  friend bool operator==(const ComputePowerConfig&, const ComputePowerConfig&) = default;
};

void validate(const ComputePowerConfig& cfg);

double dbm_to_watts(double dbm);

/// Reference path loss in dB (see ChannelConfig::ref_gain_db).
double reference_loss_db(const ChannelConfig& cfg);
/// Linear gain at the reference distance: 10^(-loss_dB / 10).
double reference_gain(const ChannelConfig& cfg);

struct ComputeEnergy {
  double energy_wh = 0.0;
  double battery_fraction = 0.0;
};

/// E_c = P_avg * t_tr, in Wh, and its share of the battery capacity.
ComputeEnergy compute_energy(const ComputePowerConfig& p, double t_tr_s);

/// g0 (d / d0)^-alpha. Distances below d0 are clamped to d0; d <= 0 throws DomainError.
double channel_gain(double d_m, const ChannelConfig& cfg);

/// Noise power N0 * b in watts.
double noise_power_w(const ChannelConfig& cfg);

/// Shannon rate b log2(1 + g p / (N0 b)) in bit/s.
double shannon_rate_bps(double d_m, const ChannelConfig& cfg);

/// s / rate. Zero bits take zero time; a rate below 1 bit/s throws LinkInfeasibleError.
double min_transmit_time(double s_bits, double d_m, const ChannelConfig& cfg);

/// t * p_k in joules.
double comm_energy(double t_s, const ChannelConfig& cfg);

/// Removes joules / 3600 Wh, floored at zero; sets `depleted` at zero.
DroneState debit_battery(DroneState drone, double joules);
/// In-place variant; returns the joules actually removed.
double debit_battery_in_place(DroneState& drone, double joules);

enum class EnergyKind : std::uint8_t { compute, transmit };

struct EnergyLedgerEntry {
  int drone = 0;
  EnergyKind kind = EnergyKind::compute;
  double joules = 0.0;
  double duration_s = 0.0;
  std::uint64_t bytes = 0;  // transmit only
  int peer = -1;            // transmit only
  int round = 0;
};

/// Append-only record of every debit.
class EnergyLedger {
 public:
  void append(const EnergyLedgerEntry& e) { entries_.push_back(e); }
  const std::vector<EnergyLedgerEntry>& entries() const noexcept { return entries_; }
  double joules_for(int drone) const;
  double total_joules(EnergyKind kind) const;

  /// drone_id,kind,joules,seconds,bytes,peer,round
  void write_csv(std::ostream& out) const;

 private:
  std::vector<EnergyLedgerEntry> entries_;
};

/// Per-drone byte counters.
struct Traffic {
  std::vector<std::uint64_t> sent;
  std::vector<std::uint64_t> received;

  explicit Traffic(std::size_t n = 0) : sent(n, 0), received(n, 0) {}
  void reset() {
    std::fill(sent.begin(), sent.end(), 0);
    std::fill(received.begin(), received.end(), 0);
  }
  std::uint64_t total_sent() const;
  std::uint64_t total_received() const;
};

/// Prices one model message from `from` to `to`: both sides count the bytes,
/// only the sender is debited transmit energy.
void meter_transmission(Fleet& fleet, int from, int to, std::uint64_t bytes, int round,
                        const ChannelConfig& cfg, EnergyLedger& ledger, Traffic& traffic);

/// Debits P_avg * seconds of compute energy.
void meter_compute(Fleet& fleet, int drone, double seconds, int round,
                   const ComputePowerConfig& cfg, EnergyLedger& ledger);

}  // namespace uavfl
