#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace suscept {

using Timestamp = std::int64_t;  // epoch seconds

inline constexpr Timestamp kSecondsPerDay = 86400;

struct Post {
  std::string id;
  std::string author_id;
  Timestamp created_at = 0;
  bool is_misinfo = false;
  std::optional<std::string> text;
};

struct User {
  std::string id;
  std::optional<std::string> occupation;
  std::optional<std::string> state;
};

enum class InteractionKind { Repost, Original, Reply };

std::string_view to_string(InteractionKind kind);
InteractionKind parse_interaction_kind(std::string_view text);

struct Interaction {
  std::string user_id;
  std::string post_id;
  InteractionKind kind = InteractionKind::Original;
  Timestamp created_at = 0;
};

struct Follow {
  std::string follower_id;
  std::string followee_id;
};

/// The observable record: posts, users, interactions and the follow graph,
/// indexed for the lookups the pair heuristics need. Immutable once built.
class Corpus {
 public:
  Corpus() = default;

  /// Validates uniqueness and referential integrity, then indexes.
  /// Throws ParseError on duplicate or malformed entities and
  /// DanglingReference on references to unknown posts or users.
  static Corpus build(std::vector<Post> posts, std::vector<User> users,
                      std::vector<Interaction> interactions, std::vector<Follow> follows);

  const std::map<std::string, Post>& posts() const { return posts_; }
  const std::map<std::string, User>& users() const { return users_; }
  const std::vector<Interaction>& interactions() const { return interactions_; }
  const std::set<std::pair<std::string, std::string>>& follows() const { return follows_; }

  const Post* find_post(const std::string& id) const;
  const User* find_user(const std::string& id) const;

  /// Interactions by a user, in input order.
  const std::vector<std::size_t>& interactions_of_user(const std::string& user_id) const;
  /// Interactions on a post, in input order.
  const std::vector<std::size_t>& interactions_on_post(const std::string& post_id) const;
  /// Followers of a user, sorted.
  const std::vector<std::string>& followers_of(const std::string& user_id) const;

  bool follows(const std::string& follower, const std::string& followee) const;
  bool reposted(const std::string& user_id, const std::string& post_id) const;

  /// Misinformation post ids in sorted order.
  std::vector<std::string> misinfo_post_ids() const;

 private:
  std::map<std::string, Post> posts_;
  std::map<std::string, User> users_;
  std::vector<Interaction> interactions_;
  std::set<std::pair<std::string, std::string>> follows_;
  std::map<std::string, std::vector<std::size_t>> by_user_;
  std::map<std::string, std::vector<std::size_t>> by_post_;
  std::map<std::string, std::vector<std::string>> followers_;
};

struct CorpusPaths {
  std::filesystem::path posts;
  std::filesystem::path users;
  std::filesystem::path interactions;
  std::filesystem::path follows;
};

/// Reads the four JSONL files. ParseError messages carry file and line.
Corpus load_corpus(const CorpusPaths& paths);
void save_corpus(const Corpus& corpus, const CorpusPaths& paths);

/// Heuristic for inferring users who saw but did not repost a post.
struct NegativeHeuristic {
  int pre_days = 10;
  int post_days = 2;

  void validate() const;
};

/// Users who follow the post's author, never reposted it, and had any
/// interaction in [t - pre_days, t + post_days]. Sorted by id.
/// Throws UnknownPost when the post is absent or not misinformation.
std::vector<std::string> infer_negative_candidates(const Corpus& corpus, const std::string& post_id,
                                                   const NegativeHeuristic& heuristic);

}  // namespace suscept
