#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace suscept {

/// Per-tweet factor scores from an external psycholinguistic analyzer.
struct FactorRow {
  std::string user_id;
  std::string factor;
  std::string post_id;
  double value = 0.0;
};

class FactorTable {
 public:
  /// Throws ParseError on duplicate (user, factor, post) or non-finite values.
  void add(FactorRow row);
  const std::vector<FactorRow>& rows() const { return rows_; }
  std::set<std::string> factors() const;

 private:
  std::vector<FactorRow> rows_;
  std::set<std::tuple<std::string, std::string, std::string>> keys_;
};

/// factors.csv: header user_id,post_id,factor,value.
FactorTable load_factors_csv(const std::filesystem::path& path);

enum class AggregationMode { Mean, Max };

/// Mean for every factor except the sparse emotion factors, which use max.
struct AggregationPolicy {
  std::map<std::string, AggregationMode> modes{{"anxious", AggregationMode::Max},
                                               {"angry", AggregationMode::Max}};
  AggregationMode fallback = AggregationMode::Mean;

  AggregationMode mode_for(const std::string& factor) const;
};

/// user -> aggregated value of `factor`. Throws UnknownFactor.
std::map<std::string, double> aggregate_factor(const FactorTable& table, const AggregationPolicy& policy,
                                               const std::string& factor);

/// Sample Pearson correlation. Throws LengthMismatch (also for n < 2) and ConstantInput.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks with ties assigned their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws LengthMismatch.
double spearman(std::span<const double> x, std::span<const double> y);

struct FactorCorrelation {
  std::string factor;
  double r = 0.0;
  std::size_t n = 0;
};

/// Pearson r between each factor's per-user aggregate and the user's score,
/// over users present on both sides. Factors whose paired data are constant
/// or shorter than two are reported with r = NaN.
std::vector<FactorCorrelation> factor_correlations(const FactorTable& table, const AggregationPolicy& policy,
                                                   const std::map<std::string, double>& user_scores);

void save_correlations_csv(std::span<const FactorCorrelation> rows, const std::filesystem::path& path);

struct GroupStat {
  std::string key;
  std::size_t n = 0;
  double mean = 0.0;
};

/// Plain per-group mean over users that have both a score and a group.
/// Sorted by key. Throws EmptyInput.
std::vector<GroupStat> community_scores(const std::map<std::string, double>& user_scores,
                                        const std::map<std::string, std::string>& grouping);

struct SmoothingConfig {
  double prior_mean = 0.0;
  double prior_strength = 20.0;  // pseudo-count
  double prior_std = 0.0;        // carried through for reporting only

  void validate() const;
};

/// (n * mean + C * prior_mean) / (n + C) per group.
std::vector<GroupStat> bayes_smooth(std::span<const GroupStat> stats, const SmoothingConfig& cfg);

/// Prior from all scored users: their mean and population std.
SmoothingConfig prior_from_scores(const std::map<std::string, double>& user_scores, double prior_strength);

/// CSV key,score,n,above_reference sorted by key; above_reference is 1 when
/// the score exceeds `reference_mean`.
void export_group_table(std::span<const GroupStat> stats, double reference_mean,
                        const std::filesystem::path& path);

}  // namespace suscept
