#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace suscept {

/// Feed-forward rectified network shape: input -> hidden... -> 1.
struct Architecture {
  std::size_t input_dim = 64;
  std::vector<std::size_t> hidden{256, 64};

  /// Throws BadArchitecture.
  void validate() const;
  std::size_t parameter_count() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Row-major weights: w[o * in + i].
template <typename T>
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<T> w;
  std::vector<T> b;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

template <typename T>
struct Network {
  std::vector<DenseLayer<T>> layers;

  static Network zeros(const Architecture& arch) {
    Network net;
    std::size_t in = arch.input_dim;
    auto widths = arch.hidden;
    widths.push_back(1);
    for (auto out : widths) {
      net.layers.push_back({in, out, std::vector<T>(in * out, T{0}), std::vector<T>(out, T{0})});
      in = out;
    }
    return net;
  }

  template <typename U>
  Network<U> cast() const {
    Network<U> net;
    for (const auto& l : layers) {
      net.layers.push_back({l.in, l.out, std::vector<U>(l.w.begin(), l.w.end()),
                            std::vector<U>(l.b.begin(), l.b.end())});
    }
    return net;
  }

  /// Visits every parameter in a fixed order (layer, weights then biases).
  template <typename F>
  void for_each(F&& f) {
    for (auto& l : layers) {
      for (auto& x : l.w) f(x);
      for (auto& x : l.b) f(x);
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& l : layers) {
      for (const auto& x : l.w) f(x);
      for (const auto& x : l.b) f(x);
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  friend bool operator==(const Network&, const Network&) = default;
};

/// Pre-activation and activation values of one forward pass, kept for
/// backpropagation. activations[0] is the input.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> activations;
};

/// Raw output of the network on [user; post]. Sums accumulate in double.
template <typename T>
double forward(const Network<T>& net, std::span<const double> user, std::span<const double> post,
               ForwardTrace* trace = nullptr);

/// Adds d(output)/d(theta) * upstream into `grad`, using a trace from forward().
template <typename T>
void backward(const Network<T>& net, const ForwardTrace& trace, double upstream, Network<double>& grad);

/// The susceptibility network plus the calibration constant used to report
/// scores on the [-100, 100] scale.
struct Model {
  Architecture arch;
  Network<float> net;
  double tau = 1.0;

  friend bool operator==(const Model&, const Model&) = default;
};

/// Weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero biases, tau = 1.
Model init_model(const Architecture& arch, std::uint64_t seed);

/// Throws DimMismatch when |user| + |post| differs from the input width.
double suscep_score(const Model& model, std::span<const double> user, std::span<const double> post);

double dot(std::span<const double> a, std::span<const double> b);

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// sigma(dot(user, post) * raw score).
double repost_prob(const Model& model, std::span<const double> user, std::span<const double> post);

/// 100 * tanh(raw / tau).
double normalize_score(const Model& model, double raw);

/// Sets tau to the population standard deviation of `raw_scores`, or 1 when
/// that is zero. Throws EmptyInput.
Model calibrate(Model model, std::span<const double> raw_scores);

/// JSON checkpoint, version 1.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace suscept
