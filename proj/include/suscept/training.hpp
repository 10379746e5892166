#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "suscept/embedding_store.hpp"
#include "suscept/model.hpp"
#include "suscept/pairs.hpp"

namespace suscept {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  double learning_rate = 3e-5;
  double lambda = 0.9;   // weight of the classification term
  double margin = 1.0;   // triplet margin
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double prob_clamp = 1e-12;

  /// Throws BadConfig.
  void validate() const;
};

inline constexpr double kDefaultProbClamp = 1e-12;

/// Binary cross-entropy with p clamped to [clamp, 1 - clamp].
double bce_loss(double p, int y, double clamp = kDefaultProbClamp);

/// max(0, (a - s)^2 - (a - ds)^2 + margin) on raw scores.
double triplet_loss(double anchor, double similar, double dissimilar, double margin);

/// Embeddings of one triplet: three user profiles against a shared post.
struct TripletFeatures {
  std::array<std::span<const double>, 3> users;  // anchor, similar, dissimilar
  std::span<const double> post;
  std::array<int, 3> labels{};
};

/// (lambda/3) * sum of BCE over the three pairs + (1 - lambda) * triplet loss.
double combined_loss(const Model& model, const TripletFeatures& triplet, const TrainConfig& cfg);

template <typename T>
double combined_loss(const Network<T>& net, const TripletFeatures& triplet, const TrainConfig& cfg);

/// Mean combined loss over the batch and its analytic gradient with respect
/// to every weight and bias. Embeddings are constants.
struct LossAndGradient {
  double loss = 0.0;
  Network<double> grad;
};

LossAndGradient grad(const Model& model, std::span<const TripletFeatures> batch, const TrainConfig& cfg);

template <typename T>
LossAndGradient grad(const Network<T>& net, const Architecture& arch, std::span<const TripletFeatures> batch,
                     const TrainConfig& cfg);

/// Max over parameters of |analytic - numeric| / max(1e-8, |analytic| + |numeric|),
/// numeric being the central difference with step `epsilon`, evaluated in extended precision.
double grad_check(const Model& model, std::span<const TripletFeatures> batch, const TrainConfig& cfg,
                  double epsilon = 1e-4);

/// Adam or plain SGD over float parameters; moments kept in double.
class Optimizer {
 public:
  Optimizer(const Architecture& arch, const TrainConfig& cfg);
  void step(Network<float>& params, const Network<double>& gradient);

 private:
  TrainConfig cfg_;
  Network<double> m_;
  Network<double> v_;
  long long t_ = 0;
};

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;  // percent
};

struct History {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
};

void save_history_csv(const History& history, const std::filesystem::path& path);

struct FitResult {
  Model model;
  History history;
};

/// Trains on the train split, scores the val split after every epoch and
/// returns the snapshot with the lowest validation loss, calibrated on the
/// train split's raw scores. Throws EmptySplit and NonFiniteLoss.
FitResult fit(Model model, const PairSet& pairs, FeatureStore& features, const TrainConfig& cfg);

/// Seed offset for the epoch-independent validation triplet stream.
inline constexpr std::uint64_t kValidationSeedSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace suscept
