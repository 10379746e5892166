#include "suscept/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "suscept/error.hpp"
#include "suscept/io.hpp"
#include "suscept/random.hpp"

namespace suscept {

using nlohmann::json;

namespace {
constexpr int kCheckpointVersion = 1;
}

void Architecture::validate() const {
  if (input_dim == 0 || input_dim % 2 != 0) {
    throw Error(ErrorCode::BadArchitecture, "input_dim must be positive and even (user half, post half)");
  }
  if (hidden.empty()) throw Error(ErrorCode::BadArchitecture, "at least one hidden layer is required");
  for (auto w : hidden) {
    if (w == 0) throw Error(ErrorCode::BadArchitecture, "hidden widths must be positive");
  }
}

std::size_t Architecture::parameter_count() const {
  std::size_t n = 0;
  std::size_t in = input_dim;
  for (auto w : hidden) {
    n += in * w + w;
    in = w;
  }
  return n + in + 1;
}

template <typename T>
double forward(const Network<T>& net, std::span<const double> user, std::span<const double> post,
               ForwardTrace* trace) {
  const std::size_t in0 = net.layers.front().in;
  if (user.size() + post.size() != in0) {
    throw Error(ErrorCode::DimMismatch, "input of width " + std::to_string(user.size() + post.size()) +
                                            " given to a network expecting " + std::to_string(in0));
  }
  std::vector<double> x(in0);
  std::copy(user.begin(), user.end(), x.begin());
  std::copy(post.begin(), post.end(), x.begin() + static_cast<std::ptrdiff_t>(user.size()));
  if (trace) {
    trace->pre.clear();
    trace->activations.clear();
  }

  const std::size_t n_layers = net.layers.size();
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto& layer = net.layers[k];
    std::vector<double> z(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const T* row = layer.w.data() + o * layer.in;
      double acc = static_cast<double>(layer.b[o]);
      for (std::size_t i = 0; i < layer.in; ++i) acc += static_cast<double>(row[i]) * x[i];
      z[o] = acc;
    }
    if (trace) {
      trace->activations.push_back(x);
      trace->pre.push_back(z);
    }
    if (k + 1 == n_layers) return z[0];
    for (auto& v : z) v = v > 0.0 ? v : 0.0;
    x = std::move(z);
  }
  return 0.0;  // unreachable for a validated network
}

template <typename T>
void backward(const Network<T>& net, const ForwardTrace& trace, double upstream, Network<double>& grad) {
  std::vector<double> delta{upstream};
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& layer = net.layers[k];
    auto& g = grad.layers[k];
    const auto& a = trace.activations[k];
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      g.b[o] += d;
      double* grow = g.w.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) grow[i] += d * a[i];
    }
    if (k == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const T* row = layer.w.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] += static_cast<double>(row[i]) * d;
    }
    const auto& pre = trace.pre[k - 1];
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (!(pre[i] > 0.0)) prev[i] = 0.0;
    }
    delta = std::move(prev);
  }
}

template double forward<float>(const Network<float>&, std::span<const double>, std::span<const double>, ForwardTrace*);
template double forward<double>(const Network<double>&, std::span<const double>, std::span<const double>, ForwardTrace*);
template void backward<float>(const Network<float>&, const ForwardTrace&, double, Network<double>&);
template void backward<double>(const Network<double>&, const ForwardTrace&, double, Network<double>&);

Model init_model(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Model m{arch, Network<float>::zeros(arch), 1.0};
  Rng rng(seed);
  for (auto& layer : m.net.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
    for (auto& w : layer.w) {
      float v = static_cast<float>(rng.uniform(-bound, bound));
      // Rounding to float must not push a draw past the bound.
      while (std::abs(static_cast<double>(v)) > bound) v = std::nextafter(v, 0.0f);
      w = v;
    }
  }
  return m;
}

double suscep_score(const Model& model, std::span<const double> user, std::span<const double> post) {
  return forward(model.net, user, post);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimMismatch, "dot product of vectors with different lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double repost_prob(const Model& model, std::span<const double> user, std::span<const double> post) {
  if (user.size() != post.size()) throw Error(ErrorCode::DimMismatch, "user and post embeddings differ in length");
  return sigmoid(dot(user, post) * suscep_score(model, user, post));
}

double normalize_score(const Model& model, double raw) { return 100.0 * std::tanh(raw / model.tau); }

Model calibrate(Model model, std::span<const double> raw_scores) {
  if (raw_scores.empty()) throw Error(ErrorCode::EmptyInput, "cannot calibrate on zero scores");
  double mean = 0.0;
  for (double s : raw_scores) mean += s;
  mean /= static_cast<double>(raw_scores.size());
  double ss = 0.0;
  for (double s : raw_scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(raw_scores.size()));
  model.tau = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  json layers = json::array();
  for (const auto& l : model.net.layers) {
    json w = json::array();
    json b = json::array();
    for (float x : l.w) w.push_back(static_cast<double>(x));
    for (float x : l.b) b.push_back(static_cast<double>(x));
    layers.push_back({{"w", std::move(w)}, {"b", std::move(b)}});
  }
  json doc = {{"version", kCheckpointVersion},
              {"arch", {{"input_dim", model.arch.input_dim}, {"hidden", model.arch.hidden}}},
              {"tau", model.tau},
              {"layers", std::move(layers)}};
  write_file_atomic(path, [&](std::ostream& out) { out << doc.dump() << '\n'; });
}

Model load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadCheckpoint, path.string() + ": " + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("version")) throw Error(ErrorCode::BadCheckpoint, "missing version");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + " is not supported");
    }
    Model m;
    m.arch.input_dim = doc.at("arch").at("input_dim").get<std::size_t>();
    m.arch.hidden = doc.at("arch").at("hidden").get<std::vector<std::size_t>>();
    try {
      m.arch.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::BadCheckpoint, e.message());
    }
    m.tau = doc.at("tau").get<double>();
    if (!(m.tau > 0.0) || !std::isfinite(m.tau)) throw Error(ErrorCode::BadCheckpoint, "tau must be positive");
    m.net = Network<float>::zeros(m.arch);
    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.size() != m.net.layers.size()) {
      throw Error(ErrorCode::BadCheckpoint, "layer count does not match the architecture");
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
      auto w = layers[k].at("w").get<std::vector<double>>();
      auto b = layers[k].at("b").get<std::vector<double>>();
      auto& l = m.net.layers[k];
      if (w.size() != l.w.size() || b.size() != l.b.size()) {
        throw Error(ErrorCode::BadCheckpoint, "layer " + std::to_string(k) + " shape does not match the architecture");
      }
      for (std::size_t i = 0; i < w.size(); ++i) l.w[i] = static_cast<float>(w[i]);
      for (std::size_t i = 0; i < b.size(); ++i) l.b[i] = static_cast<float>(b[i]);
    }
    bool finite = true;
    m.net.for_each([&](float x) { finite = finite && std::isfinite(x); });
    if (!finite) throw Error(ErrorCode::BadCheckpoint, "non-finite parameter");
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadCheckpoint, path.string() + ": " + e.what());
  }
}

}  // namespace suscept
