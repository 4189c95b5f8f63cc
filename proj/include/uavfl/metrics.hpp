#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uavfl {

enum class Phase : std::uint8_t { intra, exchange, local };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

/// One row of the logbook: one drone at the end of one global epoch.
struct RoundRecord {
  std::string run_id;
  int global_epoch = 0;
  int drone_id = 0;
  int cluster_id = 0;
  Phase phase = Phase::intra;
  double accuracy = 0.0;
  double loss = 0.0;
  double battery_pct = 1.0;  // fraction of capacity
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t bytes_total = 0;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// Throws Error when bytes_total != sent + received or a fraction leaves [0, 1].
void validate(const RoundRecord& record);

inline constexpr std::string_view kRoundCsvHeader =
    "run_id,global_epoch,drone_id,cluster_id,phase,accuracy,loss,battery_pct,bytes_sent,"
    "bytes_received,bytes_total";

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write(const RoundRecord& record) = 0;
  virtual void flush() = 0;
};

/// CSV logbook. The header is written on construction.
class CsvRecordSink final : public RecordSink {
 public:
  explicit CsvRecordSink(const std::filesystem::path& path);
  void write(const RoundRecord& record) override;
  void flush() override;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class MemoryRecordSink final : public RecordSink {
 public:
  void write(const RoundRecord& record) override { records_.push_back(record); }
  void flush() override {}
  const std::vector<RoundRecord>& records() const noexcept { return records_; }

 private:
  std::vector<RoundRecord> records_;
};

/// Validates and appends. Sink failures surface as SinkError.
void record_round(RecordSink& sink, const RoundRecord& record);

std::string to_csv_row(const RoundRecord& record);
std::vector<RoundRecord> read_round_csv(std::istream& in);
std::vector<RoundRecord> read_round_csv(const std::filesystem::path& path);

/// End-of-run row in the shape of the method comparison table.
struct RunSummary {
  std::string type_label;
  double final_accuracy = 0.0;  // percent
  double final_loss = 0.0;
  double avg_battery_pct = 0.0;  // percent
  double avg_send_gb = 0.0;      // 1 GB = 1e9 bytes
  double avg_receive_gb = 0.0;
  double avg_sr_gb = 0.0;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

/// run_id is "{type_label}_{seed}"; returns the part before the last '_'.
std::string type_label_from_run_id(std::string_view run_id);

/// Final accuracy and loss are fleet means at the last epoch; battery is the
/// mean of each drone's last battery reading; byte columns are per-drone
/// totals averaged over drones.
RunSummary summarize(std::span<const RoundRecord> records);

std::string summary_to_json(const RunSummary& summary, int indent = 2);

}  // namespace uavfl
