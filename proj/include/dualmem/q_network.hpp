#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualmem {

/// Fully connected layer, weights stored row-major as [out][in].
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  double& w(std::size_t row, std::size_t col) { return weight[row * in + col]; }
  double w(std::size_t row, std::size_t col) const { return weight[row * in + col]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameter-shaped accumulator for gradients.
struct NetworkGradients {
  std::vector<std::vector<double>> weight;
  std::vector<std::vector<double>> bias;

  double squared_norm() const {
    double s = 0.0;
    for (const auto& v : weight)
      for (double g : v) s += g * g;
    for (const auto& v : bias)
      for (double g : v) s += g * g;
    return s;
  }

  void scale(double factor) {
    for (auto& v : weight)
      for (double& g : v) g *= factor;
    for (auto& v : bias)
      for (double& g : v) g *= factor;
  }
};

/// Post-activation outputs of every layer; activations[0] is the input.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;

  const std::vector<double>& output() const { return activations.back(); }
};

/// Multi-layer perceptron with rectified-linear hidden layers and a linear
/// output layer producing one Q-value per action.
class QNetwork {
 public:
  QNetwork() = default;

  /// sizes = {obs_dim, hidden..., action_count}; all parameters start at zero.
  explicit QNetwork(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("network needs at least input and output sizes");
    for (std::size_t s : sizes_)
      if (s == 0) throw std::invalid_argument("layer sizes must be positive");
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) layers_.emplace_back(sizes_[i], sizes_[i + 1]);
  }

  /// Uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  template <class Rng>
  void initialize(Rng& rng) {
    for (auto& layer : layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& w : layer.weight) w = dist(rng);
      for (double& b : layer.bias) b = dist(rng);
    }
  }

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::vector<double> forward(std::span<const double> input) const { return trace(input).output(); }

  ForwardTrace trace(std::span<const double> input) const {
    if (input.size() != input_dim()) throw std::invalid_argument("state dimension does not match network input");
    ForwardTrace t;
    t.activations.reserve(layers_.size() + 1);
    t.activations.emplace_back(input.begin(), input.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      const auto& x = t.activations.back();
      std::vector<double> y(layer.bias);
      for (std::size_t r = 0; r < layer.out; ++r) {
        const double* row = &layer.weight[r * layer.in];
        double acc = 0.0;
        for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * x[c];
        y[r] += acc;
      }
      if (l + 1 < layers_.size())
        for (double& v : y) v = std::max(v, 0.0);
      t.activations.push_back(std::move(y));
    }
    return t;
  }

  NetworkGradients zero_gradients() const {
    NetworkGradients g;
    for (const auto& layer : layers_) {
      g.weight.emplace_back(layer.weight.size(), 0.0);
      g.bias.emplace_back(layer.bias.size(), 0.0);
    }
    return g;
  }

  /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
  void backward(const ForwardTrace& t, std::span<const double> output_grad, NetworkGradients& grads) const {
    if (output_grad.size() != output_dim()) throw std::invalid_argument("output gradient has wrong dimension");
    std::vector<double> delta(output_grad.begin(), output_grad.end());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& layer = layers_[l];
      const auto& x = t.activations[l];
      auto& gw = grads.weight[l];
      auto& gb = grads.bias[l];
      for (std::size_t r = 0; r < layer.out; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        gb[r] += d;
        double* grow = &gw[r * layer.in];
        for (std::size_t c = 0; c < layer.in; ++c) grow[c] += d * x[c];
      }
      if (l == 0) break;
      std::vector<double> prev(layer.in, 0.0);
      for (std::size_t r = 0; r < layer.out; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        const double* row = &layer.weight[r * layer.in];
        for (std::size_t c = 0; c < layer.in; ++c) prev[c] += row[c] * d;
      }
      // relu derivative of the previous layer's output
      for (std::size_t c = 0; c < layer.in; ++c)
        if (!(x[c] > 0.0)) prev[c] = 0.0;
      delta = std::move(prev);
    }
  }

  /// params -= step * grads
  void apply(const NetworkGradients& grads, double step) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& layer = layers_[l];
      for (std::size_t i = 0; i < layer.weight.size(); ++i) layer.weight[i] -= step * grads.weight[l][i];
      for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= step * grads.bias[l][i];
    }
  }

  bool finite() const {
    for (const auto& layer : layers_) {
      for (double w : layer.weight)
        if (!std::isfinite(w)) return false;
      for (double b : layer.bias)
        if (!std::isfinite(b)) return false;
    }
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
  }

  friend bool operator==(const QNetwork&, const QNetwork&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
};

// Snapshot format, all integers and floats little-endian:
//   "DQNW" | version u32 | size count u32 | sizes u32... |
//   per layer: weights f64 row-major [out][in], then biases f64 [out]
inline constexpr std::array<char, 4> kSnapshotMagic{'D', 'Q', 'N', 'W'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw std::runtime_error("truncated network snapshot");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline void save_network(const QNetwork& net, std::ostream& os) {
  os.write(kSnapshotMagic.data(), kSnapshotMagic.size());
  detail::write_le<std::uint32_t>(os, kSnapshotVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.sizes().size()));
  for (std::size_t s : net.sizes()) detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s));
  for (const auto& layer : net.layers()) {
    for (double w : layer.weight) detail::write_le<double>(os, w);
    for (double b : layer.bias) detail::write_le<double>(os, b);
  }
  if (!os) throw std::runtime_error("failed to write network snapshot");
}

inline QNetwork load_network(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kSnapshotMagic)
    throw std::runtime_error("not a network snapshot (bad magic)");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kSnapshotVersion) throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
  const auto count = detail::read_le<std::uint32_t>(is);
  if (count < 2 || count > 64) throw std::runtime_error("implausible layer count in snapshot");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) s = detail::read_le<std::uint32_t>(is);
  QNetwork net(sizes);
  for (auto& layer : net.layers()) {
    for (double& w : layer.weight) w = detail::read_le<double>(is);
    for (double& b : layer.bias) b = detail::read_le<double>(is);
  }
  return net;
}

inline void save_network(const QNetwork& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_network(net, os);
}

inline QNetwork load_network(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_network(is);
}

}  // namespace dualmem
