#include "suscept/synth.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>

#include "suscept/analysis.hpp"
#include "suscept/error.hpp"
#include "suscept/evaluation.hpp"
#include "suscept/io.hpp"
#include "suscept/random.hpp"

namespace suscept {

namespace {

// Misinformation posts fall in [kEventStart, kEventStart + 1 day); profile
// posts in [kEventStart - 9 days, kEventStart), i.e. inside every post's
// 10-day profile window and its [-10, +2] day activity window.
constexpr Timestamp kEventStart = 1'600'000'000;
constexpr Timestamp kProfileSpan = 9 * kSecondsPerDay;
constexpr Timestamp kRepostDelay = 3600;

// Gaussian draw scaled to unit expected norm, plus `shared` (already
// weighted), projected onto the unit sphere.
std::vector<float> unit_vector(Rng& rng, std::uint32_t dim, const std::vector<double>& shared) {
  std::vector<double> g(dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (std::uint32_t i = 0; i < dim; ++i) {
      g[i] = rng.normal() * scale + shared[i];
      norm += g[i] * g[i];
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  std::vector<float> v(dim);
  for (std::uint32_t i = 0; i < dim; ++i) v[i] = static_cast<float>(g[i] / norm);
  return v;
}

std::string make_id(char prefix, std::size_t i, std::size_t count) {
  const auto width = std::to_string(count > 0 ? count - 1 : 0).size();
  return fmt::format("{}{:0{}}", prefix, i, width);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_users < 1 || n_misinfo_posts < 1 || n_profile_posts_per_user < 1) {
    throw Error(ErrorCode::BadConfig, "synthetic counts must be >= 1");
  }
  if (dim < 2) throw Error(ErrorCode::BadConfig, "synthetic dim must be >= 2");
  if (!(follow_prob > 0.0 && follow_prob <= 1.0)) throw Error(ErrorCode::BadConfig, "follow_prob must lie in (0, 1]");
  if (!(anisotropy >= 0.0) || !std::isfinite(anisotropy)) throw Error(ErrorCode::BadConfig, "anisotropy must be >= 0");
  if (!(teacher_score_rms > 0.0) || !std::isfinite(teacher_score_rms)) {
    throw Error(ErrorCode::BadConfig, "teacher_score_rms must be positive");
  }
  try {
    teacher_arch().validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadConfig, e.message());
  }
}

namespace {

// Everything except follows and reposts: users, posts, profile posts,
// embeddings and the exact profiles the pipeline will compute.
struct Skeleton {
  EmbeddingTable table;
  std::vector<Post> posts;
  std::vector<User> users;
  std::vector<Interaction> interactions;
  std::vector<std::string> user_ids;
  std::vector<std::string> misinfo_ids;
  std::vector<std::string> author_ids;
  std::vector<Timestamp> misinfo_times;
  std::vector<std::vector<double>> profiles;
  std::vector<std::vector<double>> post_vectors;
};

Skeleton make_skeleton(const SynthConfig& cfg, Rng& rng) {
  Skeleton sk{EmbeddingTable(cfg.dim), {}, {}, {}, {}, {}, {}, {}, {}, {}};
  // The shared direction is itself a uniform draw on the sphere.
  const auto axis = unit_vector(rng, cfg.dim, std::vector<double>(cfg.dim, 0.0));
  std::vector<double> shared(cfg.dim);
  for (std::uint32_t i = 0; i < cfg.dim; ++i) shared[i] = cfg.anisotropy * static_cast<double>(axis[i]);

  sk.user_ids.resize(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    sk.user_ids[i] = make_id('u', i, cfg.n_users);
    sk.users.push_back({sk.user_ids[i], std::nullopt, std::nullopt});
    for (std::size_t k = 0; k < cfg.n_profile_posts_per_user; ++k) {
      const auto post_id = fmt::format("{}_p{}", sk.user_ids[i], k);
      const Timestamp t = kEventStart - kProfileSpan + static_cast<Timestamp>(rng.below(kProfileSpan));
      sk.posts.push_back({post_id, sk.user_ids[i], t, false, std::nullopt});
      sk.interactions.push_back({sk.user_ids[i], post_id, InteractionKind::Original, t});
      sk.table.insert(post_id, unit_vector(rng, cfg.dim, shared));
    }
  }

  sk.misinfo_ids.resize(cfg.n_misinfo_posts);
  sk.author_ids.resize(cfg.n_misinfo_posts);
  sk.misinfo_times.resize(cfg.n_misinfo_posts);
  for (std::size_t j = 0; j < cfg.n_misinfo_posts; ++j) {
    sk.misinfo_ids[j] = make_id('m', j, cfg.n_misinfo_posts);
    sk.author_ids[j] = make_id('a', j, cfg.n_misinfo_posts);
    sk.misinfo_times[j] = kEventStart + static_cast<Timestamp>(j * kSecondsPerDay / cfg.n_misinfo_posts);
    sk.users.push_back({sk.author_ids[j], std::nullopt, std::nullopt});
    sk.posts.push_back({sk.misinfo_ids[j], sk.author_ids[j], sk.misinfo_times[j], true, std::nullopt});
    sk.table.insert(sk.misinfo_ids[j], unit_vector(rng, cfg.dim, shared));
    sk.post_vectors.push_back(to_double(*sk.table.find(sk.misinfo_ids[j])));
  }

  // Profiles come from the same routine the pipeline uses, so E(u) here is
  // bit-identical to what training sees.
  const Corpus profile_corpus = Corpus::build(sk.posts, sk.users, sk.interactions, {});
  const ProfileConfig profile_cfg;
  sk.profiles.resize(cfg.n_users);
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    sk.profiles[i] = user_profile_embedding(profile_corpus, sk.table, sk.user_ids[i], kEventStart, profile_cfg);
  }
  return sk;
}

SynthData label(const SynthConfig& cfg, Skeleton sk, const Model& teacher, Rng& rng) {
  SynthData data;
  data.teacher = teacher;
  std::vector<double> overall(cfg.n_users, 0.0);
  std::vector<Follow> follows;
  for (std::size_t j = 0; j < cfg.n_misinfo_posts; ++j) {
    const auto& post_vec = sk.post_vectors[j];
    for (std::size_t i = 0; i < cfg.n_users; ++i) {
      const double s_star = suscep_score(teacher, sk.profiles[i], post_vec);
      data.truth.pairs.push_back({sk.user_ids[i], sk.misinfo_ids[j], s_star});
      overall[i] += s_star;
      if (!rng.bernoulli(cfg.follow_prob)) continue;
      follows.push_back({sk.user_ids[i], sk.author_ids[j]});
      if (rng.bernoulli(sigmoid(dot(sk.profiles[i], post_vec) * s_star))) {
        sk.interactions.push_back(
            {sk.user_ids[i], sk.misinfo_ids[j], InteractionKind::Repost, sk.misinfo_times[j] + kRepostDelay});
      }
    }
  }
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    data.truth.user_overall[sk.user_ids[i]] = overall[i] / static_cast<double>(cfg.n_misinfo_posts);
  }
  data.corpus = Corpus::build(std::move(sk.posts), std::move(sk.users), std::move(sk.interactions), std::move(follows));
  data.table = std::move(sk.table);
  return data;
}

}  // namespace

SynthData gen_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.data_seed);
  auto sk = make_skeleton(cfg, rng);

  // Affine calibration of the output layer: s' = k * (s - mean) with
  // k = target_rms / std, computed over the full (user, post) grid.
  Model teacher = init_model(cfg.teacher_arch(), cfg.teacher_seed);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& p : sk.post_vectors) {
    for (const auto& u : sk.profiles) {
      const double s = suscep_score(teacher, u, p);
      sum += s;
      sum_sq += s * s;
    }
  }
  const double n = static_cast<double>(sk.post_vectors.size() * sk.profiles.size());
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
  if (sd > 0.0) {
    const double k = cfg.teacher_score_rms / sd;
    auto& out = teacher.net.layers.back();
    for (auto& w : out.w) w = static_cast<float>(static_cast<double>(w) * k);
    for (auto& b : out.b) b = static_cast<float>((static_cast<double>(b) - mean) * k);
  }
  return label(cfg, std::move(sk), teacher, rng);
}

SynthData gen_synthetic(const SynthConfig& cfg, const Model& teacher) {
  cfg.validate();
  if (teacher.arch.input_dim != 2 * static_cast<std::size_t>(cfg.dim)) {
    throw Error(ErrorCode::BadConfig, "teacher input width must be twice the embedding dim");
  }
  Rng rng(cfg.data_seed);
  auto sk = make_skeleton(cfg, rng);
  return label(cfg, std::move(sk), teacher, rng);
}

SynthPaths SynthPaths::in_directory(const std::filesystem::path& dir) {
  return {{dir / "posts.jsonl", dir / "users.jsonl", dir / "interactions.jsonl", dir / "follows.jsonl"},
          dir / "embeddings.emb1",
          dir / "teacher.json",
          dir / "truth_pairs.csv",
          dir / "truth_users.csv"};
}

void save_synthetic(const SynthData& data, const SynthPaths& paths) {
  save_corpus(data.corpus, paths.corpus);
  save_table(data.table, paths.embeddings);
  save_model(data.teacher, paths.teacher);
  write_file_atomic(paths.truth_pairs, [&](std::ostream& out) {
    out << "user_id,post_id,s_star\n";
    for (const auto& p : data.truth.pairs) out << p.user_id << ',' << p.post_id << ',' << format_double(p.s_star) << '\n';
  });
  write_file_atomic(paths.truth_users, [&](std::ostream& out) {
    out << "user_id,overall_s_star\n";
    for (const auto& [user, s] : data.truth.user_overall) out << user << ',' << format_double(s) << '\n';
  });
}

std::map<std::string, double> load_truth_users_csv(const std::filesystem::path& path) {
  std::map<std::string, double> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 2) throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 1) + ": expected 2 fields");
    try {
      out[f[0]] = std::stod(f[1]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 1) + ": bad number");
    }
  }
  return out;
}

RecoveryReport recovery_report(const Model& student, const std::map<std::string, double>& teacher_overall,
                               FeatureStore& features, std::span<const std::string> misinfo_ids,
                               std::size_t n_comparisons, std::uint64_t seed) {
  std::vector<double> teacher, model, baseline;
  for (const auto& [user, s] : teacher_overall) {
    try {
      // Raw scores on both sides: the truth is not normalized either.
      double raw = 0.0;
      std::size_t n_raw = 0;
      for (const auto& post_id : misinfo_ids) {
        const auto* post = features.post(post_id);
        const auto* prof = post ? features.profile(user, post_id) : nullptr;
        if (!prof) continue;
        raw += suscep_score(student, *prof, *post);
        ++n_raw;
      }
      if (n_raw == 0) continue;
      const auto b = cosine_baseline_overall(features, user, misinfo_ids);
      teacher.push_back(s);
      model.push_back(raw / static_cast<double>(n_raw));
      baseline.push_back(b.score);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoScorablePosts && e.code() != ErrorCode::DanglingReference) throw;
    }
  }
  const std::size_t n = teacher.size();
  if (n < 2) throw Error(ErrorCode::EmptyInput, "fewer than two scorable users with ground truth");

  RecoveryReport r;
  r.n_users = n;
  r.n_comparisons = n_comparisons;
  r.spearman_overall = spearman(model, teacher);
  Rng rng(seed);
  std::size_t model_hits = 0, baseline_hits = 0;
  for (std::size_t k = 0; k < n_comparisons; ++k) {
    const auto a = static_cast<std::size_t>(rng.below(n));
    auto b = static_cast<std::size_t>(rng.below(n - 1));
    if (b >= a) ++b;
    const Choice gold = more_susceptible(teacher[a], teacher[b]);
    model_hits += more_susceptible(model[a], model[b]) == gold;
    baseline_hits += more_susceptible(baseline[a], baseline[b]) == gold;
  }
  if (n_comparisons > 0) {
    r.pairwise_agreement_vs_teacher = 100.0 * static_cast<double>(model_hits) / static_cast<double>(n_comparisons);
    r.baseline_agreement = 100.0 * static_cast<double>(baseline_hits) / static_cast<double>(n_comparisons);
  }
  return r;
}

void save_recovery_json(const RecoveryReport& report, const std::filesystem::path& path) {
  nlohmann::ordered_json doc = {{"spearman_overall", report.spearman_overall},
                                {"pairwise_agreement_vs_teacher", report.pairwise_agreement_vs_teacher},
                                {"baseline_agreement", report.baseline_agreement},
                                {"n_users", report.n_users},
                                {"n_comparisons", report.n_comparisons}};
  write_file_atomic(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

}  // namespace suscept
