#include "suscept/evaluation.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "suscept/error.hpp"
#include "suscept/io.hpp"

namespace suscept {

UserScore overall_score(const Model& model, FeatureStore& features, const std::string& user_id,
                        std::span<const std::string> misinfo_ids) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& post_id : misinfo_ids) {
    const auto* post = features.post(post_id);
    if (!post) continue;
    const auto* prof = features.profile(user_id, post_id);
    if (!prof) continue;
    sum += normalize_score(model, suscep_score(model, *prof, *post));
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoScorablePosts, "user " + user_id + " has no scorable misinformation post");
  return {user_id, sum / static_cast<double>(n), n};
}

std::vector<UserScore> score_users(const Model& model, FeatureStore& features, std::span<const std::string> user_ids,
                                   std::span<const std::string> misinfo_ids) {
  std::vector<UserScore> out;
  for (const auto& u : user_ids) {
    try {
      out.push_back(overall_score(model, features, u, misinfo_ids));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoScorablePosts) throw;
    }
  }
  return out;
}

void save_scores_csv(std::span<const UserScore> scores, const std::filesystem::path& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "user_id,overall_score,n_posts\n";
    for (const auto& s : scores) out << csv_escape(s.user_id) << ',' << format_double(s.score) << ',' << s.n_posts << '\n';
  });
}

namespace {

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": bad number '" + text + "'");
  }
}

Choice parse_choice(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  if (text == "A" || text == "a") return Choice::A;
  if (text == "B" || text == "b") return Choice::B;
  throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": choice must be A or B");
}

}  // namespace

std::vector<UserScore> load_scores_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<UserScore> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 3) throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 1) + ": expected 3 fields");
    const double n = parse_number(f[2], path, i + 1);
    out.push_back({f[0], parse_number(f[1], path, i + 1), static_cast<std::size_t>(n)});
  }
  return out;
}

Choice more_susceptible(double score_a, double score_b) { return score_a >= score_b ? Choice::A : Choice::B; }

void save_comparisons_csv(std::span<const ComparisonRecord> records, const std::filesystem::path& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "user_a,user_b,gold,pred\n";
    for (const auto& r : records) {
      out << csv_escape(r.user_a) << ',' << csv_escape(r.user_b) << ',' << (r.gold == Choice::A ? 'A' : 'B') << ','
          << (r.pred == Choice::A ? 'A' : 'B') << '\n';
    }
  });
}

std::vector<ComparisonRecord> load_comparisons_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<ComparisonRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    if (f.size() < 3 || f.size() > 4) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 1) + ": expected 3 or 4 fields");
    }
    if (f[0] == f[1]) throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 1) + ": user compared with itself");
    ComparisonRecord r{f[0], f[1], parse_choice(f[2], path, i + 1), Choice::A};
    if (f.size() == 4 && !f[3].empty()) r.pred = parse_choice(f[3], path, i + 1);
    out.push_back(std::move(r));
  }
  return out;
}

Agreement rank_agreement(std::span<const ComparisonRecord> records, std::size_t bootstrap_n, std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no comparison records");
  const std::size_t n = records.size();
  std::vector<unsigned char> hit(n);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hit[i] = records[i].pred == records[i].gold;
    correct += hit[i];
  }
  Agreement out;
  out.agreement = 100.0 * static_cast<double>(correct) / static_cast<double>(n);
  if (bootstrap_n == 0) {
    out.ci_low = out.ci_high = out.agreement;
    return out;
  }
  Rng rng(seed);
  std::vector<double> stats(bootstrap_n);
  for (auto& s : stats) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k) c += hit[rng.below(n)];
    s = 100.0 * static_cast<double>(c) / static_cast<double>(n);
  }
  std::sort(stats.begin(), stats.end());
  // Linear interpolation between order statistics.
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  out.ci_low = quantile(0.025);
  out.ci_high = quantile(0.975);
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return dot(a, b) / (na * nb);
}

double cosine_baseline_score(FeatureStore& features, const std::string& user_id, const std::string& post_id) {
  const auto* post = features.post(post_id);
  if (!post) throw Error(ErrorCode::MissingEmbedding, "no embedding for post " + post_id);
  const auto* prof = features.profile(user_id, post_id);
  if (!prof) throw Error(ErrorCode::NoProfilePosts, "user " + user_id + " has no profile at post " + post_id);
  return cosine_similarity(*prof, *post);
}

UserScore cosine_baseline_overall(FeatureStore& features, const std::string& user_id,
                                  std::span<const std::string> misinfo_ids) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& post_id : misinfo_ids) {
    if (!features.post(post_id) || !features.profile(user_id, post_id)) continue;
    sum += cosine_baseline_score(features, user_id, post_id);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoScorablePosts, "user " + user_id + " has no scorable misinformation post");
  return {user_id, sum / static_cast<double>(n), n};
}

ClassificationMetrics confusion_metrics(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  ClassificationMetrics m;
  m.n = tp + fp + tn + fn;
  if (m.n == 0) throw Error(ErrorCode::EmptySplit, "no predictions");
  m.accuracy = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(m.n);
  m.precision = tp + fp ? 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

ClassificationMetrics classify_metrics(const Model& model, const PairSet& pairs, Split split, FeatureStore& features,
                                       double threshold) {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& p : pairs.pairs) {
    if (p.split != split) continue;
    const auto* post = features.post(p.post_id);
    const auto* prof = post ? features.profile(p.user_id, p.post_id) : nullptr;
    if (!prof) continue;
    const bool predicted = repost_prob(model, *prof, *post) >= threshold;
    if (predicted) {
      (p.label ? tp : fp)++;
    } else {
      (p.label ? fn : tn)++;
    }
  }
  if (tp + fp + tn + fn == 0) {
    throw Error(ErrorCode::EmptySplit, "no scorable pairs in split " + std::string(to_string(split)));
  }
  return confusion_metrics(tp, fp, tn, fn);
}

DistributionStats welch_test(std::span<const double> pos, std::span<const double> neg) {
  if (pos.size() < 2 || neg.size() < 2) throw Error(ErrorCode::DegenerateGroup, "each group needs at least two scores");
  auto moments = [](std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [m1, v1] = moments(pos);
  const auto [m2, v2] = moments(neg);
  const double n1 = static_cast<double>(pos.size());
  const double n2 = static_cast<double>(neg.size());

  DistributionStats s;
  s.pos_mean = m1;
  s.neg_mean = m2;
  s.pos_std = std::sqrt(v1);
  s.neg_std = std::sqrt(v2);
  s.pos_n = pos.size();
  s.neg_n = neg.size();
  const double a = v1 / n1;
  const double b = v2 / n2;
  const double se = std::sqrt(a + b);
  if (se == 0.0) {
    // Both groups constant: the difference is either exact or absent.
    s.dof = n1 + n2 - 2.0;
    if (m1 == m2) {
      s.welch_t = 0.0;
      s.p_value = 1.0;
    } else {
      s.welch_t = m1 > m2 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      s.p_value = 0.0;
    }
    return s;
  }
  s.welch_t = (m1 - m2) / se;
  s.dof = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
  boost::math::students_t_distribution<double> dist(s.dof);
  s.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(s.welch_t))));
  return s;
}

DistributionStats score_distribution(const Model& model, const PairSet& pairs, std::span<const Split> splits,
                                     FeatureStore& features) {
  std::vector<double> pos, neg;
  for (const auto& p : pairs.pairs) {
    if (std::find(splits.begin(), splits.end(), p.split) == splits.end()) continue;
    const auto* post = features.post(p.post_id);
    const auto* prof = post ? features.profile(p.user_id, p.post_id) : nullptr;
    if (!prof) continue;
    (p.label ? pos : neg).push_back(suscep_score(model, *prof, *post));
  }
  return welch_test(pos, neg);
}

}  // namespace suscept
