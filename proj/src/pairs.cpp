#include "suscept/pairs.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "suscept/error.hpp"
#include "suscept/io.hpp"

namespace suscept {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  if (text == "unassigned") return Split::Unassigned;
  throw Error(ErrorCode::ParseError, "unknown split '" + std::string(text) + "'");
}

std::size_t PairSet::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [&](const Pair& p) { return p.split == split; }));
}

std::vector<std::size_t> PairSet::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].split == split) out.push_back(i);
  }
  return out;
}

PairSet load_pairs(const std::filesystem::path& path) {
  PairSet set;
  std::set<std::pair<std::string, std::string>> seen;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", path.string(), i + 1, what));
    };
    Pair p;
    std::string split = "unassigned";
    try {
      const json o = json::parse(lines[i]);
      p.user_id = o.at("user_id").get<std::string>();
      p.post_id = o.at("post_id").get<std::string>();
      p.label = o.at("label").get<int>();
      if (o.contains("split")) split = o.at("split").get<std::string>();
    } catch (const json::exception& e) {
      fail(e.what());
    }
    if (split != "train" && split != "val" && split != "test" && split != "unassigned") fail("unknown split " + split);
    p.split = parse_split(split);
    if (p.label != 0 && p.label != 1) fail("label must be 0 or 1");
    if (!seen.emplace(p.user_id, p.post_id).second) fail("duplicate pair " + p.user_id + "/" + p.post_id);
    set.pairs.push_back(std::move(p));
  }
  return set;
}

void save_pairs(const PairSet& pairs, const std::filesystem::path& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    for (const auto& p : pairs.pairs) {
      out << json{{"user_id", p.user_id}, {"post_id", p.post_id}, {"label", p.label},
                  {"split", std::string(to_string(p.split))}}
                 .dump()
          << '\n';
    }
  });
}

PairSet build_pairs(const Corpus& corpus, const EmbeddingTable& table, const BuildPairsOptions& options) {
  options.profile.validate();
  options.heuristic.validate();
  FeatureStore features(corpus, table, options.profile);
  Rng rng(options.seed);
  PairSet out;

  for (const auto& post_id : corpus.misinfo_post_ids()) {
    if (!features.post(post_id)) continue;

    std::set<std::string> reposters;
    for (auto i : corpus.interactions_on_post(post_id)) {
      const auto& it = corpus.interactions()[i];
      if (it.kind == InteractionKind::Repost) reposters.insert(it.user_id);
    }
    std::vector<std::string> positives;
    for (const auto& u : reposters) {
      if (features.profile(u, post_id)) positives.push_back(u);
    }
    if (positives.empty()) continue;

    std::vector<std::string> negatives;
    for (auto& u : infer_negative_candidates(corpus, post_id, options.heuristic)) {
      if (features.profile(u, post_id)) negatives.push_back(std::move(u));
    }
    if (options.negatives_per_post && negatives.size() > *options.negatives_per_post) {
      const std::size_t cap = *options.negatives_per_post;
      for (std::size_t i = 0; i < cap; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
        std::swap(negatives[i], negatives[j]);
      }
      negatives.resize(cap);
      std::sort(negatives.begin(), negatives.end());
    }

    for (auto& u : positives) out.pairs.push_back({std::move(u), post_id, 1, Split::Unassigned});
    for (auto& u : negatives) out.pairs.push_back({std::move(u), post_id, 0, Split::Unassigned});
  }
  if (out.pairs.empty()) throw Error(ErrorCode::EmptyResult, "no valid user-post pairs in corpus");
  return out;
}

PairSet split_pairs(PairSet pairs, const SplitRatios& r, std::uint64_t seed) {
  if (!(r.train > 0 && r.val > 0 && r.test > 0) || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadRatios, fmt::format("ratios ({}, {}, {}) must be positive and sum to 1", r.train, r.val, r.test));
  }
  const std::size_t n = pairs.size();
  const auto n_val = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * r.val)));
  const auto n_test = std::min<std::size_t>(n - n_val, static_cast<std::size_t>(std::llround(static_cast<double>(n) * r.test)));
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  for (std::size_t k = 0; k < n; ++k) {
    pairs.pairs[order[k]].split = k < n_train ? Split::Train : (k < n_train + n_val ? Split::Val : Split::Test);
  }
  return pairs;
}

TripletSampler::TripletSampler(const PairSet& pairs, Eligibility eligible)
    : pairs_(pairs), eligible_(std::move(eligible)) {
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    const auto& p = pairs.pairs[i];
    const int s = static_cast<int>(p.split);
    by_label_[s][p.label].push_back(i);
    by_post_[{s, p.post_id}].push_back(i);
    users_on_post_.insert({p.post_id, p.user_id});
  }
}

Pair TripletSampler::pick_partner(const Pair& anchor, int label, Rng& rng) const {
  const int s = static_cast<int>(anchor.split);
  std::vector<std::size_t> local;
  if (auto it = by_post_.find({s, anchor.post_id}); it != by_post_.end()) {
    for (auto i : it->second) {
      const auto& p = pairs_.pairs[i];
      if (p.label == label && p.user_id != anchor.user_id) local.push_back(i);
    }
  }
  if (!local.empty()) return pairs_.pairs[local[rng.below(local.size())]];

  // Fallback: a user from the split's global pool with the needed label,
  // paired with the anchor's post. Users already labeled on that post are
  // excluded so the synthesized label cannot contradict an observed one.
  const auto& pool = by_label_[s][label];
  auto acceptable = [&](std::size_t i) {
    const auto& u = pairs_.pairs[i].user_id;
    if (users_on_post_.count({anchor.post_id, u})) return false;
    return !eligible_ || eligible_(u, anchor.post_id);
  };
  auto make = [&](std::size_t i) { return Pair{pairs_.pairs[i].user_id, anchor.post_id, label, anchor.split}; };

  // Rejection sampling is uniform over the acceptable subset; the full scan
  // only runs when acceptable users are rare.
  constexpr int kTries = 64;
  if (!pool.empty()) {
    for (int t = 0; t < kTries; ++t) {
      const auto i = pool[rng.below(pool.size())];
      if (acceptable(i)) return make(i);
    }
  }
  std::vector<std::size_t> ok;
  for (auto i : pool) {
    if (acceptable(i)) ok.push_back(i);
  }
  if (ok.empty()) {
    throw Error(ErrorCode::NoCandidates,
                fmt::format("no {} partner for anchor {}/{}", label ? "positive" : "negative", anchor.user_id,
                            anchor.post_id));
  }
  return make(ok[rng.below(ok.size())]);
}

Triplet TripletSampler::sample(const Pair& anchor, Rng& rng) const {
  Triplet t;
  t.anchor = anchor;
  t.similar = pick_partner(anchor, anchor.label, rng);
  t.dissimilar = pick_partner(anchor, 1 - anchor.label, rng);
  return t;
}

Triplet sample_triplet(const PairSet& pairs, const Pair& anchor, Rng& rng, TripletSampler::Eligibility eligible) {
  return TripletSampler(pairs, std::move(eligible)).sample(anchor, rng);
}

}  // namespace suscept
