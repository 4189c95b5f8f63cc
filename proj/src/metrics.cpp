#include "uavfl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "json.hpp"
#include "uavfl/error.hpp"
#include "uavfl/format.hpp"

namespace uavfl {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, std::string_view field) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("bad value '" + std::string(text) + "' in column " + std::string(field));
  }
  return value;
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::intra:
      return "intra";
    case Phase::exchange:
      return "exchange";
    case Phase::local:
      return "local";
  }
  return "intra";
}

Phase parse_phase(std::string_view text) {
  if (text == "intra") return Phase::intra;
  if (text == "exchange") return Phase::exchange;
  if (text == "local") return Phase::local;
  throw Error("unknown phase '" + std::string(text) + "'");
}

void validate(const RoundRecord& r) {
  if (r.bytes_total != r.bytes_sent + r.bytes_received) {
    throw Error("record bytes_total != bytes_sent + bytes_received");
  }
  if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) throw Error("record accuracy outside [0, 1]");
  if (!(r.battery_pct >= 0.0 && r.battery_pct <= 1.0)) {
    throw Error("record battery_pct outside [0, 1]");
  }
  if (r.run_id.find(',') != std::string::npos) throw Error("run_id must not contain commas");
}

std::string to_csv_row(const RoundRecord& r) {
  std::string row;
  row.reserve(128);
  row += r.run_id;
  row += ',' + std::to_string(r.global_epoch);
  row += ',' + std::to_string(r.drone_id);
  row += ',' + std::to_string(r.cluster_id);
  row += ',';
  row += to_string(r.phase);
  row += ',' + format_double(r.accuracy);
  row += ',' + format_double(r.loss);
  row += ',' + format_double(r.battery_pct);
  row += ',' + std::to_string(r.bytes_sent);
  row += ',' + std::to_string(r.bytes_received);
  row += ',' + std::to_string(r.bytes_total);
  return row;
}

CsvRecordSink::CsvRecordSink(const std::filesystem::path& path) : path_(path), out_(path) {
  if (!out_) throw SinkError("cannot open logbook " + path.string());
  out_ << kRoundCsvHeader << '\n';
}

void CsvRecordSink::write(const RoundRecord& record) {
  out_ << to_csv_row(record) << '\n';
  if (!out_) throw SinkError("write to logbook " + path_.string() + " failed");
}

void CsvRecordSink::flush() {
  out_.flush();
  if (!out_) throw SinkError("flush of logbook " + path_.string() + " failed");
}

void record_round(RecordSink& sink, const RoundRecord& record) {
  validate(record);
  sink.write(record);
}

std::vector<RoundRecord> read_round_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRoundCsvHeader) {
    throw Error("logbook header does not match the round-record schema");
  }
  std::vector<RoundRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 11) throw Error("logbook row has " + std::to_string(cells.size()) + " columns");
    RoundRecord r;
    r.run_id = std::string(cells[0]);
    r.global_epoch = parse_number<int>(cells[1], "global_epoch");
    r.drone_id = parse_number<int>(cells[2], "drone_id");
    r.cluster_id = parse_number<int>(cells[3], "cluster_id");
    r.phase = parse_phase(cells[4]);
    r.accuracy = parse_number<double>(cells[5], "accuracy");
    r.loss = parse_number<double>(cells[6], "loss");
    r.battery_pct = parse_number<double>(cells[7], "battery_pct");
    r.bytes_sent = parse_number<std::uint64_t>(cells[8], "bytes_sent");
    r.bytes_received = parse_number<std::uint64_t>(cells[9], "bytes_received");
    r.bytes_total = parse_number<std::uint64_t>(cells[10], "bytes_total");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RoundRecord> read_round_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open logbook " + path.string());
  return read_round_csv(in);
}

std::string type_label_from_run_id(std::string_view run_id) {
  const auto pos = run_id.rfind('_');
  return std::string(pos == std::string_view::npos ? run_id : run_id.substr(0, pos));
}

RunSummary summarize(std::span<const RoundRecord> records) {
  if (records.empty()) throw Error("cannot summarize an empty record set");
  const std::string& run_id = records.front().run_id;
  int last_epoch = records.front().global_epoch;
  for (const auto& r : records) {
    if (r.run_id != run_id) throw Error("records mix run ids '" + run_id + "' and '" + r.run_id + "'");
    last_epoch = std::max(last_epoch, r.global_epoch);
  }

  struct PerDrone {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    int battery_epoch = -1;
    double battery = 0.0;
  };
  std::map<int, PerDrone> drones;
  double acc = 0.0;
  double loss = 0.0;
  std::size_t last_rows = 0;
  for (const auto& r : records) {
    auto& d = drones[r.drone_id];
    d.sent += r.bytes_sent;
    d.received += r.bytes_received;
    if (r.global_epoch >= d.battery_epoch) {
      // Ties on the same epoch keep the lower reading so the result is order-free.
      d.battery = r.global_epoch > d.battery_epoch ? r.battery_pct : std::min(d.battery, r.battery_pct);
      d.battery_epoch = r.global_epoch;
    }
  }
  // Accumulate in drone order for an order-independent sum.
  std::vector<const RoundRecord*> last;
  for (const auto& r : records) {
    if (r.global_epoch == last_epoch) last.push_back(&r);
  }
  std::sort(last.begin(), last.end(), [](const RoundRecord* a, const RoundRecord* b) {
    if (a->drone_id != b->drone_id) return a->drone_id < b->drone_id;
    if (a->accuracy != b->accuracy) return a->accuracy < b->accuracy;
    return a->loss < b->loss;
  });
  for (const auto* r : last) {
    acc += r->accuracy;
    loss += r->loss;
    ++last_rows;
  }

  RunSummary s;
  s.type_label = type_label_from_run_id(run_id);
  s.final_accuracy = 100.0 * acc / static_cast<double>(last_rows);
  s.final_loss = loss / static_cast<double>(last_rows);
  double battery = 0.0;
  double sent = 0.0;
  double received = 0.0;
  for (const auto& [id, d] : drones) {
    battery += d.battery;
    sent += static_cast<double>(d.sent);
    received += static_cast<double>(d.received);
  }
  const auto n = static_cast<double>(drones.size());
  s.avg_battery_pct = 100.0 * battery / n;
  s.avg_send_gb = sent / n / 1e9;
  s.avg_receive_gb = received / n / 1e9;
  s.avg_sr_gb = (sent + received) / n / 1e9;
  return s;
}

std::string summary_to_json(const RunSummary& s, int indent) {
  const nlohmann::ordered_json j = {{"type_label", s.type_label},
                                    {"final_accuracy", s.final_accuracy},
                                    {"final_loss", s.final_loss},
                                    {"avg_battery_pct", s.avg_battery_pct},
                                    {"avg_send_gb", s.avg_send_gb},
                                    {"avg_receive_gb", s.avg_receive_gb},
                                    {"avg_sr_gb", s.avg_sr_gb}};
  return j.dump(indent);
}

}  // namespace uavfl
