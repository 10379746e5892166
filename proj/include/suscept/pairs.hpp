#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <vector>

#include "suscept/corpus.hpp"
#include "suscept/embedding_store.hpp"
#include "suscept/random.hpp"

namespace suscept {

enum class Split { Train, Val, Test, Unassigned };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// A labeled (user, post) example; label 1 means the user reposted the post.
struct Pair {
  std::string user_id;
  std::string post_id;
  int label = 0;
  Split split = Split::Unassigned;

  friend bool operator==(const Pair&, const Pair&) = default;
};

struct PairSet {
  std::vector<Pair> pairs;

  std::size_t size() const { return pairs.size(); }
  std::size_t count(Split split) const;
  std::vector<std::size_t> indices(Split split) const;

  friend bool operator==(const PairSet&, const PairSet&) = default;
};

PairSet load_pairs(const std::filesystem::path& path);
void save_pairs(const PairSet& pairs, const std::filesystem::path& path);

/// Anchor, a same-label pair and an opposite-label pair on the anchor's post.
struct Triplet {
  Pair anchor;
  Pair similar;
  Pair dissimilar;
};

struct BuildPairsOptions {
  ProfileConfig profile;
  NegativeHeuristic heuristic;
  std::optional<std::size_t> negatives_per_post;  // unlimited when empty
  std::uint64_t seed = 0;
};

/// Positives are reposts of misinformation posts; negatives come from
/// infer_negative_candidates. Pairs without a user profile or post vector
/// are dropped, and so is every post left without a positive.
/// Throws EmptyResult when nothing survives.
PairSet build_pairs(const Corpus& corpus, const EmbeddingTable& table, const BuildPairsOptions& options);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Shuffles with `seed` and assigns round(n*val) to val, round(n*test) to
/// test and the remainder to train. Throws BadRatios.
PairSet split_pairs(PairSet pairs, const SplitRatios& ratios, std::uint64_t seed);

/// Index of pairs by split and post, used to draw triplet partners.
class TripletSampler {
 public:
  /// `eligible(user, post)` filters fallback partners, which are paired with
  /// a post they may not have seen; pass nullptr to accept every user.
  using Eligibility = std::function<bool(const std::string& user_id, const std::string& post_id)>;

  explicit TripletSampler(const PairSet& pairs, Eligibility eligible = nullptr);

  /// Draws partners for `anchor` from the anchor's own split. Throws
  /// NoCandidates when neither the post nor the global pool can supply one.
  Triplet sample(const Pair& anchor, Rng& rng) const;

 private:
  Pair pick_partner(const Pair& anchor, int label, Rng& rng) const;

  const PairSet& pairs_;
  Eligibility eligible_;
  // [split][label] -> pair indices, and (split, post) -> pair indices.
  std::array<std::array<std::vector<std::size_t>, 2>, 4> by_label_;
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> by_post_;
  std::set<std::pair<std::string, std::string>> users_on_post_;  // (post, user)
};

Triplet sample_triplet(const PairSet& pairs, const Pair& anchor, Rng& rng,
                       TripletSampler::Eligibility eligible = nullptr);

}  // namespace suscept
