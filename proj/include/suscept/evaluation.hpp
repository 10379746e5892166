#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "suscept/embedding_store.hpp"
#include "suscept/model.hpp"
#include "suscept/pairs.hpp"

namespace suscept {

struct UserScore {
  std::string user_id;
  double score = 0.0;  // normalized scale
  std::size_t n_posts = 0;
};

/// Mean normalized score over the misinformation posts for which the user
/// has a profile. Throws NoScorablePosts.
UserScore overall_score(const Model& model, FeatureStore& features, const std::string& user_id,
                        std::span<const std::string> misinfo_ids);

/// Overall scores for every user with at least one scorable post, by id.
std::vector<UserScore> score_users(const Model& model, FeatureStore& features,
                                   std::span<const std::string> user_ids,
                                   std::span<const std::string> misinfo_ids);

void save_scores_csv(std::span<const UserScore> scores, const std::filesystem::path& path);
std::vector<UserScore> load_scores_csv(const std::filesystem::path& path);

enum class Choice { A, B };

struct ComparisonRecord {
  std::string user_a;
  std::string user_b;
  Choice gold = Choice::A;
  Choice pred = Choice::A;
};

/// A when score_a >= score_b.
Choice more_susceptible(double score_a, double score_b);

void save_comparisons_csv(std::span<const ComparisonRecord> records, const std::filesystem::path& path);
/// Reads user_a,user_b,gold[,pred]; a missing pred column reads as A.
std::vector<ComparisonRecord> load_comparisons_csv(const std::filesystem::path& path);

struct Agreement {
  double agreement = 0.0;  // percent
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Percent of records with pred == gold and the [2.5, 97.5] percentile
/// interval over `bootstrap_n` resamples of the records. Throws EmptyInput.
Agreement rank_agreement(std::span<const ComparisonRecord> records, std::size_t bootstrap_n = 10000,
                         std::uint64_t seed = 0);

/// Throws ZeroVector when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Cosine between the user's profile at the post's time and the post vector.
/// Throws NoProfilePosts, MissingEmbedding, ZeroVector.
double cosine_baseline_score(FeatureStore& features, const std::string& user_id, const std::string& post_id);

/// Mean cosine baseline over the scorable misinformation posts.
UserScore cosine_baseline_overall(FeatureStore& features, const std::string& user_id,
                                  std::span<const std::string> misinfo_ids);

struct ClassificationMetrics {
  double accuracy = 0.0;  // all in percent
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
};

ClassificationMetrics confusion_metrics(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

/// Predicts a repost when repost_prob >= threshold. Pairs without features
/// are skipped. Throws EmptySplit.
ClassificationMetrics classify_metrics(const Model& model, const PairSet& pairs, Split split,
                                       FeatureStore& features, double threshold = 0.5);

struct DistributionStats {
  double pos_mean = 0.0;
  double neg_mean = 0.0;
  double pos_std = 0.0;  // sample standard deviation
  double neg_std = 0.0;
  std::size_t pos_n = 0;
  std::size_t neg_n = 0;
  double welch_t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Welch's unequal-variance t test between two samples, two-sided.
/// Throws DegenerateGroup when a group has fewer than two values.
DistributionStats welch_test(std::span<const double> positives, std::span<const double> negatives);

/// Raw scores of the selected pairs grouped by label, then welch_test.
DistributionStats score_distribution(const Model& model, const PairSet& pairs, std::span<const Split> splits,
                                     FeatureStore& features);

}  // namespace suscept
