#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "suscept/corpus.hpp"
#include "suscept/error.hpp"
#include "suscept/model.hpp"
#include "suscept/embedding_store.hpp"
#include "suscept/pairs.hpp"
#include "suscept/random.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace suscept;

class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    Rng rng(static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)) ^ ++counter);
    path_ = fs::temp_directory_path() / ("suscept_test_" + std::to_string(rng.next()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::size_t read_lines_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

inline void spit(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

// Code of the suscept::Error thrown by f; std::nullopt when nothing is thrown.
template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Freshly initialized biases are exactly zero, which puts a pre-activation
// on the ReLU kink whenever the layer below is silent. Finite differences
// are undefined there, so gradient checks use small random biases instead.
inline Model with_random_biases(Model m, Rng& rng) {
  for (auto& layer : m.net.layers) {
    for (auto& b : layer.b) b = static_cast<float>(rng.uniform(-0.1, 0.1));
  }
  return m;
}

inline constexpr Timestamp kT0 = 1'700'000'000;
inline constexpr Timestamp kHalfDay = kSecondsPerDay / 2;

struct ToyData {
  Corpus corpus;
  EmbeddingTable table{3};
};

// Small random corpus whose timestamps sit on a half-day grid, so window
// edges are hit exactly. Every non-misinformation post has an embedding;
// misinformation posts occasionally lack one.
inline ToyData random_toy_corpus(Rng& rng, std::size_t max_users = 30, std::size_t max_posts = 10) {
  const std::size_t n_users = 2 + rng.below(max_users - 1);
  const std::size_t n_misinfo = 1 + rng.below(std::min<std::size_t>(4, max_posts));
  const std::size_t n_profile = rng.below(max_posts - n_misinfo + 1);

  std::vector<User> users;
  for (std::size_t i = 0; i < n_users; ++i) users.push_back({"u" + std::to_string(i), std::nullopt, std::nullopt});
  auto some_user = [&] { return users[rng.below(n_users)].id; };

  std::vector<Post> posts;
  std::vector<Interaction> interactions;
  for (std::size_t i = 0; i < n_misinfo; ++i) {
    posts.push_back({"m" + std::to_string(i), some_user(), kT0 + static_cast<Timestamp>(rng.below(10)) * kHalfDay, true, std::nullopt});
  }
  for (std::size_t i = 0; i < n_profile; ++i) {
    const Timestamp t = kT0 + (static_cast<Timestamp>(rng.below(50)) - 30) * kHalfDay;
    Post p{"p" + std::to_string(i), some_user(), t, false, std::nullopt};
    interactions.push_back({p.author_id, p.id, InteractionKind::Original, t});
    posts.push_back(p);
  }
  for (const auto& p : posts) {
    if (!p.is_misinfo) continue;
    for (const auto& u : users) {
      if (rng.bernoulli(0.25)) {
        interactions.push_back({u.id, p.id, InteractionKind::Repost, p.created_at + static_cast<Timestamp>(rng.below(6)) * kHalfDay});
      }
    }
  }
  const std::size_t n_replies = rng.below(3 * n_users);
  for (std::size_t i = 0; i < n_replies; ++i) {
    const auto& p = posts[rng.below(posts.size())];
    interactions.push_back({some_user(), p.id, InteractionKind::Reply, kT0 + (static_cast<Timestamp>(rng.below(50)) - 30) * kHalfDay});
  }
  std::vector<Follow> follows;
  for (const auto& a : users) {
    for (const auto& b : users) {
      if (a.id != b.id && rng.bernoulli(0.3)) follows.push_back({a.id, b.id});
    }
  }
  rng.shuffle(interactions);

  ToyData out;
  for (const auto& p : posts) {
    if (p.is_misinfo && rng.bernoulli(0.2)) continue;
    out.table.insert(p.id, {static_cast<float>(rng.below(5)), static_cast<float>(rng.below(5)) - 2.0f, 1.0f});
  }
  out.corpus = Corpus::build(std::move(posts), std::move(users), std::move(interactions), std::move(follows));
  return out;
}

// Brute-force readings of the pair rules, scanning raw entity lists.

inline std::vector<std::string> brute_negatives(const Corpus& c, const std::string& post_id, int pre_days, int post_days) {
  const Post& post = c.posts().at(post_id);
  const Timestamp lo = post.created_at - pre_days * kSecondsPerDay;
  const Timestamp hi = post.created_at + post_days * kSecondsPerDay;
  std::vector<std::string> out;
  for (const auto& [uid, user] : c.users()) {
    bool follows = false;
    for (const auto& [a, b] : c.follows()) follows = follows || (a == uid && b == post.author_id);
    bool reposted = false;
    bool active = false;
    for (const auto& it : c.interactions()) {
      if (it.user_id != uid) continue;
      reposted = reposted || (it.post_id == post_id && it.kind == InteractionKind::Repost);
      active = active || (lo <= it.created_at && it.created_at <= hi);
    }
    if (follows && !reposted && active) out.push_back(uid);
  }
  return out;
}

inline bool brute_has_profile(const Corpus& c, const std::string& user, Timestamp t, int window_days = 10) {
  for (const auto& it : c.interactions()) {
    if (it.user_id == user && it.kind == InteractionKind::Original && it.created_at >= t - window_days * kSecondsPerDay &&
        it.created_at < t) {
      return true;
    }
  }
  return false;
}

// Uncapped pairs, positives then negatives per post, posts in id order.
inline std::vector<Pair> brute_pairs(const Corpus& c, const EmbeddingTable& table) {
  std::vector<Pair> out;
  for (const auto& [pid, post] : c.posts()) {
    if (!post.is_misinfo || !table.find(pid)) continue;
    std::set<std::string> pos;
    for (const auto& it : c.interactions()) {
      if (it.post_id == pid && it.kind == InteractionKind::Repost && brute_has_profile(c, it.user_id, post.created_at)) {
        pos.insert(it.user_id);
      }
    }
    if (pos.empty()) continue;
    for (const auto& u : pos) out.push_back({u, pid, 1, Split::Unassigned});
    for (const auto& u : brute_negatives(c, pid, 10, 2)) {
      if (brute_has_profile(c, u, post.created_at)) out.push_back({u, pid, 0, Split::Unassigned});
    }
  }
  return out;
}

}  // namespace testing
