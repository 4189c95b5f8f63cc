#include "uavfl/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>

#include "uavfl/data.hpp"
#include "uavfl/error.hpp"
#include "uavfl/rng.hpp"

namespace uavfl {

namespace {

struct Offsets {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

Offsets offsets(const ModelLayout& l) {
  Offsets o;
  const std::size_t bias = l.bias ? 1 : 0;
  if (l.hidden == 0) {
    o.w2 = 0;
    o.b2 = l.outputs * l.input_dim;
    o.total = o.b2 + bias * l.outputs;
    return o;
  }
  o.w1 = 0;
  o.b1 = l.hidden * l.input_dim;
  o.w2 = o.b1 + bias * l.hidden;
  o.b2 = o.w2 + l.outputs * l.hidden;
  o.total = o.b2 + bias * l.outputs;
  return o;
}

// out = M v (+ b), M is rows x cols row-major.
void affine(const double* m, const double* b, std::span<const double> v, std::size_t rows,
            double* out) {
  const std::size_t cols = v.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b != nullptr ? b[r] : 0.0;
    const double* row = m + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  auto bits = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.insert(out.end(), bits.begin(), bits.end());
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t at) {
  std::array<std::uint8_t, sizeof(T)> bits{};
  std::memcpy(bits.data(), in.data() + at, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

void check_layout(const ModelLayout& l) {
  if (l.input_dim == 0 || l.outputs == 0) throw Error("model layout needs input_dim and outputs > 0");
  if (l.loss == Loss::squared_error && l.outputs != 1) {
    throw Error("squared-error models must have exactly one output");
  }
}

}  // namespace

std::size_t ModelLayout::dimension() const noexcept { return offsets(*this).total; }

std::uint32_t ModelLayout::hash() const noexcept {
  std::uint32_t h = 2166136261u;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<std::uint8_t>(v >> (8 * i));
      h *= 16777619u;
    }
  };
  mix(input_dim);
  mix(hidden);
  mix(outputs);
  mix(static_cast<std::uint64_t>(loss));
  mix(bias ? 1 : 0);
  return h;
}

ModelParams::ModelParams(ModelLayout layout, std::size_t bytes_per_value)
    : ModelParams(layout, std::vector<double>(layout.dimension(), 0.0), bytes_per_value) {}

ModelParams::ModelParams(ModelLayout layout, std::vector<double> values,
                         std::size_t bytes_per_value)
    : layout_(layout), values_(std::move(values)), bytes_per_value_(bytes_per_value) {
  check_layout(layout_);
  if (values_.size() != layout_.dimension()) {
    throw Error("parameter count " + std::to_string(values_.size()) +
                " does not match layout dimension " + std::to_string(layout_.dimension()));
  }
  if (bytes_per_value_ != 4 && bytes_per_value_ != 8) {
    throw Error("bytes_per_value must be 4 or 8");
  }
}

bool ModelParams::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::vector<std::uint8_t> ModelParams::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(wire_bytes());
  put_le<std::uint32_t>(out, kMagic);
  put_le<std::uint32_t>(out, layout_.hash());
  put_le<std::uint64_t>(out, values_.size());
  for (const double v : values_) {
    if (bytes_per_value_ == 4) {
      put_le<float>(out, static_cast<float>(v));
    } else {
      put_le<double>(out, v);
    }
  }
  return out;
}

ModelParams ModelParams::deserialize(std::span<const std::uint8_t> bytes,
                                     const ModelLayout& layout) {
  if (bytes.size() < kHeaderBytes) throw Error("model message shorter than its header");
  if (get_le<std::uint32_t>(bytes, 0) != kMagic) throw Error("bad model message magic");
  if (get_le<std::uint32_t>(bytes, 4) != layout.hash()) throw Error("model layout hash mismatch");
  const auto count = get_le<std::uint64_t>(bytes, 8);
  if (count != layout.dimension()) throw Error("model message count does not match layout");
  const std::size_t payload = bytes.size() - kHeaderBytes;
  if (count == 0 || payload % count != 0) throw Error("model message has a ragged payload");
  const std::size_t width = payload / count;
  if (width != 4 && width != 8) throw Error("unsupported value width in model message");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kHeaderBytes + i * width;
    values[i] = width == 4 ? static_cast<double>(get_le<float>(bytes, at)) : get_le<double>(bytes, at);
  }
  return ModelParams(layout, std::move(values), width);
}

ModelParams init_params(const ModelLayout& layout, std::uint64_t seed,
                        std::size_t bytes_per_value) {
  ModelParams p(layout, bytes_per_value);
  const Offsets o = offsets(layout);
  Rng rng(derive_seed(seed, "init_params"));
  auto w = p.values();
  if (layout.hidden > 0) {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(layout.input_dim));
    for (std::size_t i = o.w1; i < o.b1; ++i) w[i] = s1 * rng.normal();
    const double s2 = 1.0 / std::sqrt(static_cast<double>(layout.hidden));
    for (std::size_t i = o.w2; i < o.b2; ++i) w[i] = s2 * rng.normal();
  } else {
    for (std::size_t i = o.w2; i < o.b2; ++i) w[i] = 0.01 * rng.normal();
  }
  return p;
}

void forward(const ModelLayout& layout, std::span<const double> w, std::span<const double> x,
             std::span<double> out) {
  const Offsets o = offsets(layout);
  if (layout.hidden == 0) {
    affine(w.data() + o.w2, layout.bias ? w.data() + o.b2 : nullptr, x, layout.outputs, out.data());
    return;
  }
  std::vector<double> h(layout.hidden);
  affine(w.data() + o.w1, layout.bias ? w.data() + o.b1 : nullptr, x, layout.hidden, h.data());
  for (auto& v : h) v = std::tanh(v);
  affine(w.data() + o.w2, layout.bias ? w.data() + o.b2 : nullptr, h, layout.outputs, out.data());
}

double loss_and_gradient(const ModelLayout& layout, std::span<const double> w, const Dataset& data,
                         std::span<const std::size_t> rows, std::span<double> grad) {
  const Offsets o = offsets(layout);
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  if (rows.empty()) return 0.0;

  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::sort(order.begin(), order.end());

  const std::size_t in = layout.input_dim;
  const std::size_t hid = layout.hidden;
  const std::size_t outs = layout.outputs;
  std::vector<double> h(hid), z(outs), dz(outs), dh(hid);
  const std::span<const double> hidden_act(h);

  double total = 0.0;
  for (const std::size_t r : order) {
    const auto x = data.features(r);
    if (hid > 0) {
      affine(w.data() + o.w1, layout.bias ? w.data() + o.b1 : nullptr, x, hid, h.data());
      for (auto& v : h) v = std::tanh(v);
      affine(w.data() + o.w2, layout.bias ? w.data() + o.b2 : nullptr, hidden_act, outs, z.data());
    } else {
      affine(w.data() + o.w2, layout.bias ? w.data() + o.b2 : nullptr, x, outs, z.data());
    }

    if (layout.loss == Loss::cross_entropy) {
      const int y = data.label(r);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (std::size_t k = 0; k < outs; ++k) sum += std::exp(z[k] - zmax);
      const double lse = zmax + std::log(sum);
      total += lse - z[static_cast<std::size_t>(y)];
      for (std::size_t k = 0; k < outs; ++k) {
        dz[k] = std::exp(z[k] - lse) - (static_cast<int>(k) == y ? 1.0 : 0.0);
      }
    } else {
      const double e = z[0] - data.target(r);
      total += 0.5 * e * e;
      dz[0] = e;
    }
    if (!want_grad) continue;

    const std::span<const double> src = hid > 0 ? hidden_act : x;
    for (std::size_t k = 0; k < outs; ++k) {
      double* row = grad.data() + o.w2 + k * src.size();
      for (std::size_t c = 0; c < src.size(); ++c) row[c] += dz[k] * src[c];
      if (layout.bias) grad[o.b2 + k] += dz[k];
    }
    if (hid == 0) continue;
    for (std::size_t j = 0; j < hid; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < outs; ++k) acc += w[o.w2 + k * hid + j] * dz[k];
      dh[j] = acc * (1.0 - h[j] * h[j]);
    }
    for (std::size_t j = 0; j < hid; ++j) {
      double* row = grad.data() + o.w1 + j * in;
      for (std::size_t c = 0; c < in; ++c) row[c] += dh[j] * x[c];
      if (layout.bias) grad[o.b1 + j] += dh[j];
    }
  }

  const double inv = 1.0 / static_cast<double>(order.size());
  if (want_grad) {
    for (auto& g : grad) g *= inv;
  }
  return total * inv;
}

}  // namespace uavfl
