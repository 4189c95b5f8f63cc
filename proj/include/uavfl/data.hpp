#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace uavfl {

/// Row-major feature matrix with one target per row. Classification targets
/// hold the class index as a double.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t feature_dim) : dim_(feature_dim) {}

  void add(std::span<const double> features, double target);

  std::size_t size() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }
  std::size_t feature_dim() const noexcept { return dim_; }
  std::span<const double> features(std::size_t row) const {
    return {features_.data() + row * dim_, dim_};
  }
  double target(std::size_t row) const { return targets_[row]; }
  int label(std::size_t row) const { return static_cast<int>(targets_[row]); }
  /// Largest class index + 1.
  std::size_t class_count() const;

  Dataset subset(std::span<const std::size_t> rows) const;
  /// Concatenation; feature dimensions must agree.
  static Dataset concat(std::span<const Dataset> parts);

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<double> targets_;
};

/// One drone's local data (n_k = size()).
using DatasetPartition = Dataset;

struct BlobSpec {
  std::size_t total = 2000;
  std::size_t dim = 10;
  std::size_t classes = 4;
  double center_scale = 1.0;  // stddev of class centers per coordinate
  double noise = 1.0;         // stddev of samples around their center
};

/// Gaussian-blob classification data, balanced across classes, shuffled.
Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed);

/// CSV with one example per line: label, then features. Lines starting with '#'
/// and a non-numeric header line are skipped.
Dataset load_csv_dataset(const std::filesystem::path& path);

struct EvalSplit {
  Dataset train;
  Dataset eval;
};

/// Holds out round(fraction * size) rows (at least one) chosen by seed.
EvalSplit split_eval(const Dataset& source, double fraction, std::uint64_t seed);

/// Deals `per_drone` rows to each of `n_drones` partitions.
///
/// round(overlap * per_drone) rows form a pool shared by every partition; the
/// rest of each partition is drawn without replacement from the remaining rows
/// while they last, then with replacement.
std::vector<DatasetPartition> partition_dataset(const Dataset& source, std::size_t n_drones,
                                                std::size_t per_drone, double overlap,
                                                std::uint64_t seed);

/// Row indices into `source` chosen by partition_dataset (same arguments, same result).
std::vector<std::vector<std::size_t>> partition_indices(std::size_t source_size,
                                                        std::size_t n_drones,
                                                        std::size_t per_drone, double overlap,
                                                        std::uint64_t seed);

}  // namespace uavfl
