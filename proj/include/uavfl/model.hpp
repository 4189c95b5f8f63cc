#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace uavfl {

class Dataset;
class Rng;

enum class Loss : std::uint8_t { cross_entropy, squared_error };

/// Architecture of the desk-scale model.
///
/// hidden == 0: affine map (multinomial logistic regression with cross-entropy,
/// or linear regression with squared error). hidden > 0: one tanh hidden layer.
/// Parameter order: [W1 (hidden x input), b1, W2 (outputs x hidden), b2], or
/// [W (outputs x input), b] without a hidden layer. Biases are omitted when
/// `bias` is false.
struct ModelLayout {
  std::size_t input_dim = 1;
  std::size_t hidden = 0;
  std::size_t outputs = 1;
  Loss loss = Loss::cross_entropy;
  bool bias = true;

  std::size_t dimension() const noexcept;
  /// Stable 32-bit fingerprint written into the wire header.
  std::uint32_t hash() const noexcept;

  friend bool operator==(const ModelLayout&, const ModelLayout&) = default;
};

/// Flat parameter vector bound to a layout.
class ModelParams {
 public:
  static constexpr std::size_t kHeaderBytes = 16;
  static constexpr std::uint32_t kMagic = 0x46564155;  // "UAVF" little-endian

  ModelParams() = default;
  /// Zero-initialized parameters.
  explicit ModelParams(ModelLayout layout, std::size_t bytes_per_value = 4);
  ModelParams(ModelLayout layout, std::vector<double> values, std::size_t bytes_per_value = 4);

  const ModelLayout& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t bytes_per_value() const noexcept { return bytes_per_value_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const noexcept;

  /// length x bytes_per_value.
  std::size_t payload_bytes() const noexcept { return values_.size() * bytes_per_value_; }
  /// Header plus payload: the size of one transmitted model message.
  std::size_t wire_bytes() const noexcept { return kHeaderBytes + payload_bytes(); }

  /// Little-endian header (magic u32, layout hash u32, count u64) followed by
  /// float32 (bytes_per_value 4) or float64 (8) values.
  std::vector<std::uint8_t> serialize() const;
  static ModelParams deserialize(std::span<const std::uint8_t> bytes, const ModelLayout& layout);

  /// Exact (bitwise for non-NaN) equality of layout and values.
  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelLayout layout_;
  std::vector<double> values_;
  std::size_t bytes_per_value_ = 4;
};

/// Small random initialization (scaled normal), deterministic in `seed`.
ModelParams init_params(const ModelLayout& layout, std::uint64_t seed,
                        std::size_t bytes_per_value = 4);

/// Raw model output (logits, or the regression prediction) for one example.
void forward(const ModelLayout& layout, std::span<const double> w, std::span<const double> x,
             std::span<double> out);

/// Mean loss over `rows` of `data`; adds the mean gradient into `grad` when it
/// is non-empty (grad is overwritten, not accumulated). Rows are visited in
/// ascending order so the result does not depend on how `rows` was shuffled.
double loss_and_gradient(const ModelLayout& layout, std::span<const double> w, const Dataset& data,
                         std::span<const std::size_t> rows, std::span<double> grad);

}  // namespace uavfl
