#include "uavfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "uavfl/error.hpp"
#include "uavfl/rng.hpp"

namespace uavfl {

void Dataset::add(std::span<const double> features, double target) {
  if (features.size() != dim_) {
    throw DatasetError("feature dimension " + std::to_string(features.size()) +
                       " does not match dataset dimension " + std::to_string(dim_));
  }
  features_.insert(features_.end(), features.begin(), features.end());
  targets_.push_back(target);
}

std::size_t Dataset::class_count() const {
  double hi = -1.0;
  for (const double t : targets_) hi = std::max(hi, t);
  return static_cast<std::size_t>(hi + 1.0);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(dim_);
  out.features_.reserve(rows.size() * dim_);
  out.targets_.reserve(rows.size());
  for (const std::size_t r : rows) out.add(features(r), targets_[r]);
  return out;
}

Dataset Dataset::concat(std::span<const Dataset> parts) {
  if (parts.empty()) return Dataset();
  Dataset out(parts.front().feature_dim());
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < p.size(); ++r) out.add(p.features(r), p.target(r));
  }
  return out;
}

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2 || spec.dim == 0 || spec.total == 0) {
    throw DatasetError("blob spec needs classes >= 2, dim >= 1 and total >= 1");
  }
  Rng rng(derive_seed(seed, "blobs"));
  std::vector<double> centers(spec.classes * spec.dim);
  for (auto& c : centers) c = spec.center_scale * rng.normal();

  std::vector<std::size_t> labels(spec.total);
  for (std::size_t i = 0; i < spec.total; ++i) labels[i] = i % spec.classes;
  rng.shuffle(std::span<std::size_t>(labels));

  Dataset out(spec.dim);
  std::vector<double> x(spec.dim);
  for (const std::size_t y : labels) {
    for (std::size_t d = 0; d < spec.dim; ++d) {
      x[d] = centers[y * spec.dim + d] + spec.noise * rng.normal();
    }
    out.add(x, static_cast<double>(y));
  }
  return out;
}

Dataset load_csv_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset " + path.string());
  std::optional<Dataset> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    row.clear();
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (!out) continue;  // header
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (row.size() < 2) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": need label and features");
    }
    if (!out) out.emplace(row.size() - 1);
    if (row[0] < 0.0 || row[0] != std::floor(row[0])) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": label must be a class index");
    }
    out->add(std::span<const double>(row).subspan(1), row[0]);
  }
  if (!out || out->empty()) throw DatasetError("dataset " + path.string() + " is empty");
  return std::move(*out);
}

EvalSplit split_eval(const Dataset& source, double fraction, std::uint64_t seed) {
  if (source.size() < 2) throw DatasetError("need at least 2 rows to hold out an evaluation split");
  if (!(fraction > 0.0 && fraction < 1.0)) throw DatasetError("eval fraction must be in (0, 1)");
  std::vector<std::size_t> perm(source.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "eval_split"));
  rng.shuffle(std::span<std::size_t>(perm));
  auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(source.size())));
  held = std::clamp<std::size_t>(held, 1, source.size() - 1);
  std::vector<std::size_t> eval_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(held), perm.end());
  std::sort(eval_rows.begin(), eval_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {source.subset(train_rows), source.subset(eval_rows)};
}

std::vector<std::vector<std::size_t>> partition_indices(std::size_t source_size,
                                                        std::size_t n_drones,
                                                        std::size_t per_drone, double overlap,
                                                        std::uint64_t seed) {
  if (source_size == 0) throw DatasetError("cannot partition an empty dataset");
  if (per_drone < 1) throw DatasetError("per_drone must be >= 1");
  if (n_drones < 1) throw DatasetError("n_drones must be >= 1");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw DatasetError("overlap must be in [0, 1]");

  Rng rng(derive_seed(seed, "partition"));
  std::vector<std::size_t> perm(source_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));

  const auto shared_count = std::min<std::size_t>(
      per_drone, static_cast<std::size_t>(std::llround(overlap * static_cast<double>(per_drone))));
  std::vector<std::size_t> shared;
  std::span<const std::size_t> rest(perm);
  if (shared_count <= source_size) {
    shared.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(shared_count));
    rest = rest.subspan(shared_count);
  } else {
    for (std::size_t i = 0; i < shared_count; ++i) shared.push_back(perm[rng.uniform_index(source_size)]);
  }

  std::vector<std::vector<std::size_t>> out(n_drones);
  std::size_t cursor = 0;
  for (auto& part : out) {
    part = shared;
    while (part.size() < per_drone) {
      if (cursor < rest.size()) {
        part.push_back(rest[cursor++]);
      } else if (!rest.empty()) {
        part.push_back(rest[rng.uniform_index(rest.size())]);
      } else {
        part.push_back(perm[rng.uniform_index(perm.size())]);
      }
    }
  }
  return out;
}

std::vector<DatasetPartition> partition_dataset(const Dataset& source, std::size_t n_drones,
                                                std::size_t per_drone, double overlap,
                                                std::uint64_t seed) {
  const auto rows = partition_indices(source.size(), n_drones, per_drone, overlap, seed);
  std::vector<DatasetPartition> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(source.subset(r));
  return out;
}

}  // namespace uavfl
