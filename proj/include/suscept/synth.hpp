#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suscept/corpus.hpp"
#include "suscept/embedding_store.hpp"
#include "suscept/model.hpp"

namespace suscept {

struct SynthConfig {
  std::size_t n_users = 200;
  std::size_t n_misinfo_posts = 40;
  std::size_t n_profile_posts_per_user = 2;
  std::uint32_t dim = 32;
  std::uint64_t teacher_seed = 1;
  std::uint64_t data_seed = 2;
  double follow_prob = 0.2;
  std::vector<std::size_t> teacher_hidden{32, 16};
  /// Weight of a direction shared by every embedding, before projecting
  /// back onto the unit sphere. 0 gives the uniform sphere; positive values
  /// mimic sentence encoders, whose unrelated texts still have positive cosine.
  double anisotropy = 1.0;
  /// The teacher's output layer is rescaled and shifted so s* has zero mean
  /// and this root-mean-square over the generated (user, post) grid.
  double teacher_score_rms = 8.0;

  /// Throws BadConfig.
  void validate() const;
  Architecture teacher_arch() const { return {2 * static_cast<std::size_t>(dim), teacher_hidden}; }
};

struct PairTruth {
  std::string user_id;
  std::string post_id;
  double s_star = 0.0;
};

struct GroundTruth {
  std::vector<PairTruth> pairs;              // every (user, misinfo post)
  std::map<std::string, double> user_overall;  // mean raw teacher score per user
};

struct SynthData {
  Corpus corpus;
  EmbeddingTable table;
  Model teacher;
  GroundTruth truth;
};

/// Generates a corpus whose repost labels follow
/// sigma(dot(E(u), E(p)) * s*(u, p)) for a fixed random teacher network.
SynthData gen_synthetic(const SynthConfig& cfg);
/// Same, with a caller-supplied teacher used as is (no output calibration;
/// arch must match 2 * dim).
SynthData gen_synthetic(const SynthConfig& cfg, const Model& teacher);

struct SynthPaths {
  CorpusPaths corpus;
  std::filesystem::path embeddings;
  std::filesystem::path teacher;
  std::filesystem::path truth_pairs;
  std::filesystem::path truth_users;

  static SynthPaths in_directory(const std::filesystem::path& dir);
};

void save_synthetic(const SynthData& data, const SynthPaths& paths);

/// user_id,overall_s_star
std::map<std::string, double> load_truth_users_csv(const std::filesystem::path& path);

struct RecoveryReport {
  double spearman_overall = 0.0;
  double pairwise_agreement_vs_teacher = 0.0;  // percent
  double baseline_agreement = 0.0;             // percent
  std::size_t n_users = 0;
  std::size_t n_comparisons = 0;
};

/// Compares each user's mean raw student score (and mean cosine baseline)
/// with the teacher's mean raw score. Pairwise agreement uses `n_comparisons` seeded random
/// user pairs. Throws EmptyInput when fewer than two users are scorable.
RecoveryReport recovery_report(const Model& student, const std::map<std::string, double>& teacher_overall,
                               FeatureStore& features, std::span<const std::string> misinfo_ids,
                               std::size_t n_comparisons = 2000, std::uint64_t seed = 0);

void save_recovery_json(const RecoveryReport& report, const std::filesystem::path& path);

}  // namespace suscept
