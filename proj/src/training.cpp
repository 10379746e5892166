#include "suscept/training.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "suscept/error.hpp"
#include "suscept/io.hpp"
#include "suscept/logging.hpp"

namespace suscept {

namespace {

template <typename T>
Network<double> zeros_like(const Network<T>& net) {
  Network<double> g;
  for (const auto& l : net.layers) {
    g.layers.push_back({l.in, l.out, std::vector<double>(l.w.size(), 0.0), std::vector<double>(l.b.size(), 0.0)});
  }
  return g;
}

// d BCE / d z for p = sigma(z); zero where the clamp is active.
double bce_dz(double z, int y, double clamp) {
  const double p = sigmoid(z);
  if (p < clamp || p > 1.0 - clamp) return 0.0;
  return p - static_cast<double>(y);
}

// Loss evaluated entirely in extended precision. Finite differences of the
// double loss carry ~ulp(L)/epsilon of noise, which swamps gradients that are
// exactly zero (e.g. biases whose shift moves all three scores equally).
using Wide = long double;

Wide wide_forward(const Network<Wide>& net, std::span<const double> user, std::span<const double> post) {
  std::vector<Wide> x(user.begin(), user.end());
  x.insert(x.end(), post.begin(), post.end());
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& layer = net.layers[k];
    std::vector<Wide> z(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      Wide acc = layer.b[o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += layer.w[o * layer.in + i] * x[i];
      z[o] = k + 1 == net.layers.size() || acc > 0 ? acc : 0;
    }
    x = std::move(z);
  }
  return x[0];
}

Wide wide_loss(const Network<Wide>& net, const TripletFeatures& t, const TrainConfig& cfg) {
  std::array<Wide, 3> s{};
  Wide bce = 0;
  const Wide clamp = cfg.prob_clamp;
  for (int i = 0; i < 3; ++i) {
    s[i] = wide_forward(net, t.users[i], t.post);
    Wide d = 0;
    for (std::size_t j = 0; j < t.post.size(); ++j) d += static_cast<Wide>(t.users[i][j]) * t.post[j];
    const Wide p = std::clamp(1 / (1 + std::exp(-d * s[i])), clamp, 1 - clamp);
    bce -= t.labels[i] ? std::log(p) : std::log(1 - p);
  }
  const Wide near = (s[0] - s[1]) * (s[0] - s[1]);
  const Wide far = (s[0] - s[2]) * (s[0] - s[2]);
  const Wide lambda = cfg.lambda;
  return lambda * (bce / 3) + (1 - lambda) * std::max<Wide>(0, near - far + static_cast<Wide>(cfg.margin));
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error(ErrorCode::BadConfig, "learning_rate must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::BadConfig, "lambda must lie in [0, 1]");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw Error(ErrorCode::BadConfig, "margin must be non-negative");
  if (epochs < 1) throw Error(ErrorCode::BadConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::BadConfig, "batch_size must be >= 1");
  if (!(prob_clamp >= 0.0 && prob_clamp < 0.5)) throw Error(ErrorCode::BadConfig, "prob_clamp must lie in [0, 0.5)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_epsilon > 0.0)) {
    throw Error(ErrorCode::BadConfig, "invalid adam hyperparameters");
  }
}

double bce_loss(double p, int y, double clamp) {
  const double pc = std::clamp(p, clamp, 1.0 - clamp);
  return -(y * std::log(pc) + (1 - y) * std::log(1.0 - pc));
}

double triplet_loss(double anchor, double similar, double dissimilar, double margin) {
  const double near = (anchor - similar) * (anchor - similar);
  const double far = (anchor - dissimilar) * (anchor - dissimilar);
  return std::max(0.0, near - far + margin);
}

template <typename T>
double combined_loss(const Network<T>& net, const TripletFeatures& t, const TrainConfig& cfg) {
  std::array<double, 3> s{};
  double bce = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (t.users[i].size() != t.post.size()) throw Error(ErrorCode::DimMismatch, "user and post embeddings differ in length");
    s[i] = forward(net, t.users[i], t.post);
    bce += bce_loss(sigmoid(dot(t.users[i], t.post) * s[i]), t.labels[i], cfg.prob_clamp);
  }
  // Grouped so that lambda = 1 and lambda = 0 reproduce either term exactly.
  return cfg.lambda * (bce / 3.0) + (1.0 - cfg.lambda) * triplet_loss(s[0], s[1], s[2], cfg.margin);
}

template double combined_loss<float>(const Network<float>&, const TripletFeatures&, const TrainConfig&);
template double combined_loss<double>(const Network<double>&, const TripletFeatures&, const TrainConfig&);

double combined_loss(const Model& model, const TripletFeatures& triplet, const TrainConfig& cfg) {
  return combined_loss(model.net, triplet, cfg);
}

template <typename T>
LossAndGradient grad(const Network<T>& net, const Architecture& /*arch*/, std::span<const TripletFeatures> batch,
                     const TrainConfig& cfg) {
  if (batch.empty()) throw Error(ErrorCode::EmptyInput, "gradient of an empty batch");
  LossAndGradient out{0.0, zeros_like(net)};
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::array<ForwardTrace, 3> traces;

  for (const auto& t : batch) {
    std::array<double, 3> s{};
    std::array<double, 3> ds{};
    double bce = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (t.users[i].size() != t.post.size()) throw Error(ErrorCode::DimMismatch, "user and post embeddings differ in length");
      s[i] = forward(net, t.users[i], t.post, &traces[i]);
      const double d = dot(t.users[i], t.post);
      const double z = d * s[i];
      bce += bce_loss(sigmoid(z), t.labels[i], cfg.prob_clamp);
      ds[i] = cfg.lambda / 3.0 * bce_dz(z, t.labels[i], cfg.prob_clamp) * d;
    }
    const double hinge = (s[0] - s[1]) * (s[0] - s[1]) - (s[0] - s[2]) * (s[0] - s[2]) + cfg.margin;
    if (hinge > 0.0) {
      const double w = 1.0 - cfg.lambda;
      ds[0] += w * 2.0 * (s[2] - s[1]);
      ds[1] += w * -2.0 * (s[0] - s[1]);
      ds[2] += w * 2.0 * (s[0] - s[2]);
    }
    out.loss += cfg.lambda * (bce / 3.0) + (1.0 - cfg.lambda) * std::max(0.0, hinge);
    for (int i = 0; i < 3; ++i) {
      if (ds[i] != 0.0) backward(net, traces[i], ds[i] * inv_b, out.grad);
    }
  }
  out.loss *= inv_b;
  return out;
}

template LossAndGradient grad<float>(const Network<float>&, const Architecture&, std::span<const TripletFeatures>,
                                     const TrainConfig&);
template LossAndGradient grad<double>(const Network<double>&, const Architecture&, std::span<const TripletFeatures>,
                                      const TrainConfig&);

LossAndGradient grad(const Model& model, std::span<const TripletFeatures> batch, const TrainConfig& cfg) {
  return grad(model.net, model.arch, batch, cfg);
}

double grad_check(const Model& model, std::span<const TripletFeatures> batch, const TrainConfig& cfg, double epsilon) {
  const auto analytic = grad(model.net, model.arch, batch, cfg).grad;
  auto theta = model.net.cast<Wide>();

  std::vector<Wide*> params;
  theta.for_each([&](Wide& x) { params.push_back(&x); });
  std::vector<double> expected;
  analytic.for_each([&](double x) { expected.push_back(x); });

  auto mean_loss = [&] {
    Wide sum = 0;
    for (const auto& t : batch) sum += wide_loss(theta, t, cfg);
    return sum / static_cast<Wide>(batch.size());
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Wide orig = *params[k];
    *params[k] = orig + epsilon;
    const Wide plus = mean_loss();
    *params[k] = orig - epsilon;
    const Wide minus = mean_loss();
    *params[k] = orig;
    const double numeric = static_cast<double>((plus - minus) / (2 * static_cast<Wide>(epsilon)));
    const double a = expected[k];
    const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

Optimizer::Optimizer(const Architecture& arch, const TrainConfig& cfg)
    : cfg_(cfg), m_(Network<double>::zeros(arch)), v_(Network<double>::zeros(arch)) {}

void Optimizer::step(Network<float>& params, const Network<double>& g) {
  auto update = [&](std::vector<float>& p, const std::vector<double>& gv, std::vector<double>& m, std::vector<double>& v,
                    double c1, double c2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gv[i];
      if (cfg_.optimizer == OptimizerKind::Sgd) {
        p[i] = static_cast<float>(static_cast<double>(p[i]) - cfg_.learning_rate * gi);
        continue;
      }
      m[i] = cfg_.adam_beta1 * m[i] + (1.0 - cfg_.adam_beta1) * gi;
      v[i] = cfg_.adam_beta2 * v[i] + (1.0 - cfg_.adam_beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] = static_cast<float>(static_cast<double>(p[i]) - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_epsilon));
    }
  };
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    update(params.layers[k].w, g.layers[k].w, m_.layers[k].w, v_.layers[k].w, c1, c2);
    update(params.layers[k].b, g.layers[k].b, m_.layers[k].b, v_.layers[k].b, c1, c2);
  }
}

void save_history_csv(const History& history, const std::filesystem::path& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "epoch,train_loss,val_loss,val_accuracy,is_best\n";
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
      const auto& r = history.epochs[e];
      out << (e + 1) << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
          << format_double(r.val_accuracy) << ',' << (e == history.best_epoch ? 1 : 0) << '\n';
    }
  });
}

namespace {

TripletFeatures features_of(const Triplet& t, FeatureStore& features) {
  TripletFeatures f;
  const std::array<const Pair*, 3> members{&t.anchor, &t.similar, &t.dissimilar};
  const auto* post = features.post(t.anchor.post_id);
  if (!post) throw Error(ErrorCode::MissingEmbedding, "no embedding for post " + t.anchor.post_id);
  f.post = *post;
  for (int i = 0; i < 3; ++i) {
    const auto* prof = features.profile(members[i]->user_id, t.anchor.post_id);
    if (!prof) throw Error(ErrorCode::NoProfilePosts, "no profile for user " + members[i]->user_id);
    f.users[i] = *prof;
    f.labels[i] = members[i]->label;
  }
  return f;
}

}  // namespace

FitResult fit(Model model, const PairSet& pairs, FeatureStore& features, const TrainConfig& cfg) {
  cfg.validate();
  auto usable = [&](Split split) {
    std::vector<std::size_t> out;
    for (auto i : pairs.indices(split)) {
      if (features.has_features(pairs.pairs[i].user_id, pairs.pairs[i].post_id)) out.push_back(i);
    }
    return out;
  };
  const auto train = usable(Split::Train);
  const auto val = usable(Split::Val);
  if (train.empty()) throw Error(ErrorCode::EmptySplit, "no usable train pairs");
  if (val.empty()) throw Error(ErrorCode::EmptySplit, "no usable validation pairs");

  TripletSampler sampler(pairs, [&](const std::string& u, const std::string& p) { return features.has_features(u, p); });
  Rng rng(cfg.seed);
  Optimizer optimizer(model.arch, cfg);
  History history;
  Model best = model;
  double best_val = std::numeric_limits<double>::infinity();

  auto draw = [&](std::size_t idx, Rng& r, std::vector<TripletFeatures>& into) {
    try {
      into.push_back(features_of(sampler.sample(pairs.pairs[idx], r), features));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCandidates) throw;
      log().debug("skipping anchor {}/{}: {}", pairs.pairs[idx].user_id, pairs.pairs[idx].post_id, e.what());
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = train;
    rng.shuffle(order);
    std::vector<TripletFeatures> batch;
    double loss_sum = 0.0;
    std::size_t seen = 0;
    auto flush = [&] {
      if (batch.empty()) return;
      auto lg = grad(model, batch, cfg);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      seen += batch.size();
      optimizer.step(model.net, lg.grad);
      batch.clear();
    };
    for (auto idx : order) {
      draw(idx, rng, batch);
      if (batch.size() == static_cast<std::size_t>(cfg.batch_size)) flush();
    }
    flush();
    if (seen == 0) throw Error(ErrorCode::EmptySplit, "no train anchor yielded a triplet");

    Rng val_rng(cfg.seed ^ kValidationSeedSalt);
    std::vector<TripletFeatures> val_triplets;
    for (auto idx : val) draw(idx, val_rng, val_triplets);
    if (val_triplets.empty()) throw Error(ErrorCode::EmptySplit, "no validation anchor yielded a triplet");
    double val_sum = 0.0;
    for (const auto& t : val_triplets) val_sum += combined_loss(model, t, cfg);

    std::size_t correct = 0;
    for (auto idx : val) {
      const auto& p = pairs.pairs[idx];
      const double prob = repost_prob(model, *features.profile(p.user_id, p.post_id), *features.post(p.post_id));
      correct += static_cast<std::size_t>((prob >= 0.5 ? 1 : 0) == p.label);
    }

    EpochRecord rec{loss_sum / static_cast<double>(seen), val_sum / static_cast<double>(val_triplets.size()),
                    100.0 * static_cast<double>(correct) / static_cast<double>(val.size())};
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw Error(ErrorCode::NonFiniteLoss, fmt::format("epoch {}: train loss {}, val loss {}; lower the learning rate",
                                                         epoch + 1, rec.train_loss, rec.val_loss));
    }
    history.epochs.push_back(rec);
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best = model;
      history.best_epoch = static_cast<std::size_t>(epoch);
    }
    log().debug("epoch {}: train {:.6f} val {:.6f} acc {:.2f}", epoch + 1, rec.train_loss, rec.val_loss, rec.val_accuracy);
  }

  std::vector<double> raw;
  raw.reserve(train.size());
  for (auto idx : train) {
    const auto& p = pairs.pairs[idx];
    raw.push_back(suscep_score(best, *features.profile(p.user_id, p.post_id), *features.post(p.post_id)));
  }
  best = calibrate(std::move(best), raw);
  log().info("trained {} epochs; best epoch {} (val loss {:.6f}), tau {:.6f}", cfg.epochs, history.best_epoch + 1,
             best_val, best.tau);
  return {std::move(best), std::move(history)};
}

}  // namespace suscept
