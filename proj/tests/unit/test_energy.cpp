#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "uavfl/energy.hpp"
#include "uavfl/error.hpp"

using namespace uavfl;

namespace {

bool within_pct(double got, double want, double pct) {
  return std::abs(got - want) <= pct / 100.0 * std::abs(want);
}

}  // namespace

TEST_CASE("compute energy") {
  ComputePowerConfig p;
  p.avg_power_w = 50.0;
  p.battery_capacity_wh = 274.0;
  const auto e = compute_energy(p, 600.0);
  CHECK(std::abs(e.energy_wh - 8.333333333) < 1e-6);
  CHECK(std::abs(e.battery_fraction - 0.030414) < 1e-6);

  p.avg_power_w = 274.0;
  const auto full = compute_energy(p, 3600.0);
  CHECK(full.energy_wh == doctest::Approx(274.0));
  CHECK(full.battery_fraction == doctest::Approx(1.0));

  const auto none = compute_energy(p, 0.0);
  CHECK(none.energy_wh == 0.0);
  CHECK(none.battery_fraction == 0.0);
  CHECK_THROWS_AS(compute_energy(p, -1.0), DomainError);
}

TEST_CASE("reference gain and channel gain") {
  const ChannelConfig cfg;
  // 28 + 20 log10(2) = 34.0206 dB of loss at 1 m.
  CHECK(reference_loss_db(cfg) == doctest::Approx(34.0206).epsilon(1e-6));
  CHECK(within_pct(reference_gain(cfg), 3.9625e-4, 1.0));
  CHECK(channel_gain(1.0, cfg) == reference_gain(cfg));
  CHECK(within_pct(channel_gain(5.0, cfg), 1.149e-5, 1.0));
  for (double d : {1.0, 1.7, 3.0, 12.5}) {
    CHECK(std::abs(channel_gain(2 * d, cfg) / channel_gain(d, cfg) - std::pow(2.0, -2.2)) < 1e-12);
  }
  CHECK(channel_gain(0.5, cfg) == reference_gain(cfg));
  CHECK_THROWS_AS(channel_gain(0.0, cfg), DomainError);

  ChannelConfig explicit_db = cfg;
  explicit_db.ref_gain_db = 40.0;
  CHECK(reference_gain(explicit_db) == doctest::Approx(1e-4));
  ChannelConfig hz = cfg;
  hz.carrier_unit = FrequencyUnit::hz;
  CHECK(reference_loss_db(hz) == doctest::Approx(28 + 20 * std::log10(2e9)));
}

TEST_CASE("link budget at five meters") {
  const ChannelConfig cfg;
  const double noise = std::pow(10.0, -174.0 / 10.0) / 1000.0 * 20e6;
  CHECK(within_pct(noise, 7.962e-14, 1.0));
  CHECK(within_pct(noise_power_w(cfg), noise, 1e-9));

  const double gain = std::pow(10.0, -(28 + 20 * std::log10(2.0)) / 10.0) * std::pow(5.0, -2.2);
  const double snr = gain * 0.01 / noise;
  CHECK(within_pct(snr, 1.443e6, 1.0));
  const double rate = 20e6 * std::log2(1 + snr);
  CHECK(within_pct(rate, 4.09e8, 1.0));
  CHECK(within_pct(shannon_rate_bps(5.0, cfg), rate, 1e-9));
  const double t = 3.2e6 / rate;
  CHECK(within_pct(t, 7.8e-3, 1.0));
  CHECK(within_pct(min_transmit_time(3.2e6, 5.0, cfg), t, 1e-9));
}

TEST_CASE("transmit time shape") {
  const ChannelConfig cfg;
  CHECK(min_transmit_time(0.0, 5.0, cfg) == 0.0);
  CHECK(min_transmit_time(6.4e6, 5.0, cfg) == 2 * min_transmit_time(3.2e6, 5.0, cfg));
  double prev = 0.0;
  for (double d = 1.0; d <= 200.0; d += 1.0) {
    const double t = min_transmit_time(1e6, d, cfg);
    if (d > 1.0) CHECK(t > prev);
    prev = t;
  }
  ChannelConfig wide = cfg;
  prev = std::numeric_limits<double>::infinity();
  for (double b = 1e6; b <= 1e8; b *= 2) {
    wide.bandwidth_hz = b;
    const double t = min_transmit_time(1e6, 5.0, wide);
    CHECK(t < prev);
    prev = t;
  }
  CHECK_THROWS_AS(min_transmit_time(1.0, -1.0, cfg), DomainError);
  ChannelConfig dead = cfg;
  dead.tx_power_dbm = -400.0;
  CHECK_THROWS_AS(min_transmit_time(8.0, 5.0, dead), LinkInfeasibleError);
}

TEST_CASE("comm energy") {
  const ChannelConfig cfg;
  CHECK(dbm_to_watts(10.0) == doctest::Approx(0.01));
  CHECK(comm_energy(0.0, cfg) == 0.0);
  CHECK(comm_energy(1.0, cfg) == doctest::Approx(0.01));
  CHECK(comm_energy(0.874, cfg) == doctest::Approx(8.74e-3));
}

TEST_CASE("battery debits") {
  DroneState d;
  d.battery_capacity_wh = 274.0;
  d.battery_remaining_wh = 274.0;
  CHECK(debit_battery(d, 0.0).battery_remaining_wh == 274.0);
  const DroneState after = debit_battery(d, 9864.0);
  CHECK(after.battery_remaining_wh == doctest::Approx(271.26));
  CHECK(after.battery_fraction() == doctest::Approx(0.99));
  const DroneState empty = debit_battery(d, 274.0 * 3600.0);
  CHECK(empty.battery_remaining_wh == 0.0);
  CHECK(empty.depleted);
  CHECK_FALSE(empty.alive());

  DroneState e = d;
  e.battery_remaining_wh = 1.0;
  CHECK(debit_battery_in_place(e, 7200.0) == doctest::Approx(3600.0));
  CHECK(e.battery_remaining_wh == 0.0);
}

TEST_CASE("metering charges only the sender and counts bytes on both sides") {
  Fleet f = spawn_fleet(3, {10, 10}, 0.0, 274.0, 4);
  f.drones[0].position = {0, 0, 0};
  f.drones[1].position = {5, 0, 0};
  f.drones[2].position = {0, 0.2, 0};
  const ChannelConfig cfg;
  EnergyLedger ledger;
  Traffic traffic(3);
  meter_transmission(f, 0, 1, 400000, 1, cfg, ledger, traffic);
  CHECK(traffic.sent[0] == 400000);
  CHECK(traffic.received[1] == 400000);
  CHECK(traffic.total_sent() == traffic.total_received());
  REQUIRE(ledger.entries().size() == 1);
  const auto& e = ledger.entries()[0];
  CHECK(e.kind == EnergyKind::transmit);
  CHECK(e.peer == 1);
  CHECK(e.joules == doctest::Approx(min_transmit_time(3.2e6, 5.0, cfg) * 0.01));
  CHECK(f.drones[1].battery_remaining_wh == 274.0);
  CHECK(f.drones[0].battery_remaining_wh < 274.0);

  // Closer than d0 is priced at d0.
  meter_transmission(f, 0, 2, 1000, 1, cfg, ledger, traffic);
  CHECK(ledger.entries()[1].duration_s == doctest::Approx(min_transmit_time(8000, 1.0, cfg)));

  ComputePowerConfig compute;
  meter_compute(f, 2, 36.0, 2, compute, ledger);
  CHECK(ledger.entries().back().joules == doctest::Approx(3600.0));
  CHECK(f.drones[2].battery_remaining_wh == doctest::Approx(273.0));

  for (int id = 0; id < 3; ++id) {
    const double used = (274.0 - f.drones[static_cast<std::size_t>(id)].battery_remaining_wh) * 3600.0;
    CHECK(std::abs(ledger.joules_for(id) - used) < 1e-6);
  }
  CHECK(ledger.total_joules(EnergyKind::compute) == doctest::Approx(3600.0));

  std::ostringstream csv;
  ledger.write_csv(csv);
  CHECK(csv.str().rfind("drone_id,kind,joules,seconds,bytes,peer,round\n", 0) == 0);
}

TEST_CASE("config validation") {
  ChannelConfig c;
  CHECK_NOTHROW(validate(c));
  c.bandwidth_hz = 0.0;
  CHECK_THROWS_AS(validate(c), DomainError);
  ComputePowerConfig p;
  p.avg_power_w = -1.0;
  CHECK_THROWS_AS(validate(p), DomainError);
}
