#include "suscept/corpus.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>

#include "suscept/error.hpp"
#include "suscept/io.hpp"

namespace suscept {

using nlohmann::json;

namespace {

const std::vector<std::size_t> kNoIndices;
const std::vector<std::string> kNoUsers;

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", path.string(), line, what));
}

// Calls `handle(object, line_no)` for every non-blank line of a JSONL file.
template <typename F>
void for_each_jsonl(const std::filesystem::path& path, F&& handle) {
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      parse_fail(path, i + 1, e.what());
    }
    if (!obj.is_object()) parse_fail(path, i + 1, "expected a JSON object");
    try {
      handle(obj, i + 1);
    } catch (const json::exception& e) {
      parse_fail(path, i + 1, e.what());
    }
  }
}

std::string required_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw Error(ErrorCode::ParseError, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

Timestamp required_time(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw Error(ErrorCode::ParseError, std::string("missing integer field '") + key + "'");
  }
  return it->get<Timestamp>();
}

// Re-throws library errors with file and line attached.
template <typename F>
void with_location(const std::filesystem::path& path, std::size_t line, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) parse_fail(path, line, e.message());
    throw;
  }
}

}  // namespace

std::string_view to_string(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::Repost: return "repost";
    case InteractionKind::Original: return "original";
    case InteractionKind::Reply: return "reply";
  }
  return "original";
}

InteractionKind parse_interaction_kind(std::string_view text) {
  if (text == "repost") return InteractionKind::Repost;
  if (text == "original") return InteractionKind::Original;
  if (text == "reply") return InteractionKind::Reply;
  throw Error(ErrorCode::ParseError, "unknown interaction kind '" + std::string(text) + "'");
}

Corpus Corpus::build(std::vector<Post> posts, std::vector<User> users, std::vector<Interaction> interactions,
                     std::vector<Follow> follows) {
  Corpus c;
  for (auto& p : posts) {
    if (p.id.empty()) throw Error(ErrorCode::ParseError, "post with empty id");
    if (p.created_at < 0) throw Error(ErrorCode::ParseError, "post " + p.id + " has negative created_at");
    auto id = p.id;
    if (!c.posts_.emplace(id, std::move(p)).second) throw Error(ErrorCode::ParseError, "duplicate post id " + id);
  }
  for (auto& u : users) {
    if (u.id.empty()) throw Error(ErrorCode::ParseError, "user with empty id");
    auto id = u.id;
    if (!c.users_.emplace(id, std::move(u)).second) throw Error(ErrorCode::ParseError, "duplicate user id " + id);
  }
  for (const auto& [id, p] : c.posts_) {
    if (!c.users_.count(p.author_id)) {
      throw Error(ErrorCode::DanglingReference, "post " + id + " has unknown author " + p.author_id);
    }
  }
  c.interactions_ = std::move(interactions);
  for (std::size_t i = 0; i < c.interactions_.size(); ++i) {
    const auto& it = c.interactions_[i];
    if (!c.users_.count(it.user_id)) {
      throw Error(ErrorCode::DanglingReference, "interaction references unknown user " + it.user_id);
    }
    if (!c.posts_.count(it.post_id)) {
      throw Error(ErrorCode::DanglingReference, "interaction references unknown post " + it.post_id);
    }
    c.by_user_[it.user_id].push_back(i);
    c.by_post_[it.post_id].push_back(i);
  }
  for (auto& f : follows) {
    if (!c.users_.count(f.follower_id) || !c.users_.count(f.followee_id)) {
      throw Error(ErrorCode::DanglingReference,
                  "follow edge " + f.follower_id + " -> " + f.followee_id + " references an unknown user");
    }
    if (c.follows_.emplace(f.follower_id, f.followee_id).second) {
      c.followers_[f.followee_id].push_back(f.follower_id);
    }
  }
  for (auto& [_, list] : c.followers_) std::sort(list.begin(), list.end());
  return c;
}

const Post* Corpus::find_post(const std::string& id) const {
  auto it = posts_.find(id);
  return it == posts_.end() ? nullptr : &it->second;
}

const User* Corpus::find_user(const std::string& id) const {
  auto it = users_.find(id);
  return it == users_.end() ? nullptr : &it->second;
}

const std::vector<std::size_t>& Corpus::interactions_of_user(const std::string& user_id) const {
  auto it = by_user_.find(user_id);
  return it == by_user_.end() ? kNoIndices : it->second;
}

const std::vector<std::size_t>& Corpus::interactions_on_post(const std::string& post_id) const {
  auto it = by_post_.find(post_id);
  return it == by_post_.end() ? kNoIndices : it->second;
}

const std::vector<std::string>& Corpus::followers_of(const std::string& user_id) const {
  auto it = followers_.find(user_id);
  return it == followers_.end() ? kNoUsers : it->second;
}

bool Corpus::follows(const std::string& follower, const std::string& followee) const {
  return follows_.count({follower, followee}) > 0;
}

bool Corpus::reposted(const std::string& user_id, const std::string& post_id) const {
  for (auto i : interactions_on_post(post_id)) {
    const auto& it = interactions_[i];
    if (it.kind == InteractionKind::Repost && it.user_id == user_id) return true;
  }
  return false;
}

std::vector<std::string> Corpus::misinfo_post_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, p] : posts_) {
    if (p.is_misinfo) ids.push_back(id);
  }
  return ids;
}

Corpus load_corpus(const CorpusPaths& paths) {
  std::vector<Post> posts;
  std::vector<User> users;
  std::vector<Interaction> interactions;
  std::vector<Follow> follows;
  std::set<std::string> post_ids;
  std::set<std::string> user_ids;

  for_each_jsonl(paths.posts, [&](const json& o, std::size_t line) {
    with_location(paths.posts, line, [&] {
      Post p;
      p.id = required_string(o, "id");
      p.author_id = required_string(o, "author_id");
      p.created_at = required_time(o, "created_at");
      auto m = o.find("is_misinfo");
      if (m == o.end() || !m->is_boolean()) throw Error(ErrorCode::ParseError, "missing boolean field 'is_misinfo'");
      p.is_misinfo = m->get<bool>();
      p.text = optional_string(o, "text");
      if (p.id.empty()) throw Error(ErrorCode::ParseError, "empty post id");
      if (p.created_at < 0) throw Error(ErrorCode::ParseError, "negative created_at");
      if (!post_ids.insert(p.id).second) throw Error(ErrorCode::ParseError, "duplicate post id " + p.id);
      posts.push_back(std::move(p));
    });
  });
  for_each_jsonl(paths.users, [&](const json& o, std::size_t line) {
    with_location(paths.users, line, [&] {
      User u;
      u.id = required_string(o, "id");
      u.occupation = optional_string(o, "occupation");
      u.state = optional_string(o, "state");
      if (u.id.empty()) throw Error(ErrorCode::ParseError, "empty user id");
      if (!user_ids.insert(u.id).second) throw Error(ErrorCode::ParseError, "duplicate user id " + u.id);
      users.push_back(std::move(u));
    });
  });
  for_each_jsonl(paths.interactions, [&](const json& o, std::size_t line) {
    with_location(paths.interactions, line, [&] {
      Interaction it;
      it.user_id = required_string(o, "user_id");
      it.post_id = required_string(o, "post_id");
      it.kind = parse_interaction_kind(required_string(o, "kind"));
      it.created_at = required_time(o, "created_at");
      interactions.push_back(std::move(it));
    });
  });
  for_each_jsonl(paths.follows, [&](const json& o, std::size_t line) {
    with_location(paths.follows, line, [&] {
      follows.push_back({required_string(o, "follower_id"), required_string(o, "followee_id")});
    });
  });
  return Corpus::build(std::move(posts), std::move(users), std::move(interactions), std::move(follows));
}

void save_corpus(const Corpus& corpus, const CorpusPaths& paths) {
  write_file_atomic(paths.posts, [&](std::ostream& out) {
    for (const auto& [id, p] : corpus.posts()) {
      json o = {{"id", p.id}, {"author_id", p.author_id}, {"created_at", p.created_at}, {"is_misinfo", p.is_misinfo}};
      if (p.text) o["text"] = *p.text;
      out << o.dump() << '\n';
    }
  });
  write_file_atomic(paths.users, [&](std::ostream& out) {
    for (const auto& [id, u] : corpus.users()) {
      json o = {{"id", u.id}};
      if (u.occupation) o["occupation"] = *u.occupation;
      if (u.state) o["state"] = *u.state;
      out << o.dump() << '\n';
    }
  });
  write_file_atomic(paths.interactions, [&](std::ostream& out) {
    for (const auto& it : corpus.interactions()) {
      json o = {{"user_id", it.user_id},
                {"post_id", it.post_id},
                {"kind", std::string(to_string(it.kind))},
                {"created_at", it.created_at}};
      out << o.dump() << '\n';
    }
  });
  write_file_atomic(paths.follows, [&](std::ostream& out) {
    for (const auto& [follower, followee] : corpus.follows()) {
      out << json{{"follower_id", follower}, {"followee_id", followee}}.dump() << '\n';
    }
  });
}

void NegativeHeuristic::validate() const {
  if (pre_days < 1 || post_days < 1) throw Error(ErrorCode::BadConfig, "negative heuristic windows must be >= 1 day");
}

std::vector<std::string> infer_negative_candidates(const Corpus& corpus, const std::string& post_id,
                                                   const NegativeHeuristic& h) {
  const Post* post = corpus.find_post(post_id);
  if (!post || !post->is_misinfo) throw Error(ErrorCode::UnknownPost, "no misinformation post " + post_id);
  const Timestamp lo = post->created_at - h.pre_days * kSecondsPerDay;
  const Timestamp hi = post->created_at + h.post_days * kSecondsPerDay;

  std::vector<std::string> out;
  for (const auto& user : corpus.followers_of(post->author_id)) {
    if (corpus.reposted(user, post_id)) continue;
    const auto& mine = corpus.interactions_of_user(user);
    const bool active = std::any_of(mine.begin(), mine.end(), [&](std::size_t i) {
      const auto t = corpus.interactions()[i].created_at;
      return t >= lo && t <= hi;
    });
    if (active) out.push_back(user);
  }
  return out;
}

}  // namespace suscept
