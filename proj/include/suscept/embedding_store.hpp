#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "suscept/corpus.hpp"

namespace suscept {

/// Fixed-dimension float vectors keyed by id. Iteration order is by id.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::uint32_t dim = 1);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Throws DuplicateId for a repeated or empty id, DimMismatch for a wrong
  /// length and BadConfig for non-finite components.
  void insert(std::string id, std::vector<float> vector);

  const std::vector<float>* find(const std::string& id) const;
  const std::map<std::string, std::vector<float>>& entries() const { return entries_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::uint32_t dim_;
  std::map<std::string, std::vector<float>> entries_;
};

/// EMB1: "EMB1", u32 dim, u64 count, then per record u32 id length, id bytes,
/// dim little-endian f32. Records are written sorted by id bytes.
EmbeddingTable load_table(const std::filesystem::path& path);
void save_table(const EmbeddingTable& table, const std::filesystem::path& path);

struct ProfileConfig {
  int window_days = 10;
  std::set<InteractionKind> source_kinds{InteractionKind::Original};

  void validate() const;
};

/// Mean embedding of the user's `source_kinds` posts created in
/// [ref_time - window_days, ref_time). Throws NoProfilePosts when nothing
/// qualifies and MissingEmbedding when a qualifying post has no vector.
std::vector<double> user_profile_embedding(const Corpus& corpus, const EmbeddingTable& table,
                                           const std::string& user_id, Timestamp ref_time,
                                           const ProfileConfig& cfg);

std::vector<double> to_double(std::span<const float> values);

/// Memoised (user, post) -> profile lookups and post vectors used by the
/// training and evaluation loops. Not thread-safe.
class FeatureStore {
 public:
  FeatureStore(const Corpus& corpus, const EmbeddingTable& table, ProfileConfig cfg);

  /// Profile of `user_id` at the creation time of `post_id`, or nullptr when
  /// the user has no qualifying posts. MissingEmbedding still throws.
  const std::vector<double>* profile(const std::string& user_id, const std::string& post_id);
  /// nullptr when the post has no embedding.
  const std::vector<double>* post(const std::string& post_id);

  bool has_features(const std::string& user_id, const std::string& post_id) {
    return post(post_id) != nullptr && profile(user_id, post_id) != nullptr;
  }

  const Corpus& corpus() const { return corpus_; }
  const EmbeddingTable& table() const { return table_; }
  const ProfileConfig& config() const { return cfg_; }

 private:
  const Corpus& corpus_;
  const EmbeddingTable& table_;
  ProfileConfig cfg_;
  std::map<std::pair<std::string, std::string>, std::pair<bool, std::vector<double>>> profiles_;
  std::map<std::string, std::pair<bool, std::vector<double>>> posts_;
};

}  // namespace suscept
