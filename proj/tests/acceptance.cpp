// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>

#include "suscept/analysis.hpp"
#include "suscept/evaluation.hpp"
#include "suscept/synth.hpp"
#include "suscept/training.hpp"
#include "support.hpp"

using namespace suscept;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    pass_ = pass_ && ok;
  }
  Verdict verdict(std::string detail) const {
    for (const auto& f : failures_) detail += "; failed: " + f;
    return {pass_, std::move(detail)};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failures_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  Rng rng(2024);
  const double lambdas[] = {0.0, 0.5, 0.9, 1.0};
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Architecture arch;
    do {
      const std::size_t dim = 1 + rng.below(6);
      arch.input_dim = 2 * dim;
      arch.hidden = {1 + rng.below(16)};
      if (rng.bernoulli(0.5)) arch.hidden.push_back(1 + rng.below(12));
    } while (arch.parameter_count() > 1000);
    const auto model = testing::with_random_biases(init_model(arch, 100 + k), rng);
    const std::size_t dim = arch.input_dim / 2;
    const std::size_t n = 2 + rng.below(3);
    std::vector<std::vector<double>> storage;
    storage.reserve(4 * n);
    std::vector<TripletFeatures> batch;
    for (std::size_t b = 0; b < n; ++b) {
      for (int i = 0; i < 4; ++i) {
        std::vector<double> v(dim);
        for (auto& x : v) x = rng.normal();
        storage.push_back(std::move(v));
      }
      TripletFeatures t;
      for (int i = 0; i < 3; ++i) t.users[i] = storage[storage.size() - 4 + i];
      t.post = storage.back();
      const int y = static_cast<int>(rng.below(2));
      t.labels = {y, y, 1 - y};
      batch.push_back(t);
    }
    TrainConfig cfg;
    cfg.lambda = lambdas[k % 4];
    const double err = grad_check(model, batch, cfg);
    worst = std::max(worst, err);
    c.expect(err < 1e-4, fmt::format("config {} (lambda {}) error {:.3g}", k, cfg.lambda, err));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, fmt::format("runtime {:.1f} s", secs));
  return c.verdict(fmt::format("20 configs, max relative error {:.3g}, {:.2f} s", worst, secs));
}

Verdict loss_algebra() {
  Checker c;
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= 1e-12, fmt::format("{}: {} vs {}", what, got, want));
  };
  near(triplet_loss(0, 0, 2, 1), 0.0, "margin satisfied");
  near(triplet_loss(0, 0, 0, 1), 1.0, "all equal");
  near(triplet_loss(1, 3, 1.5, 1), 4.75, "hand value");
  near(bce_loss(0.5, 1), std::log(2.0), "bce ln 2");
  near(bce_loss(0.75, 0), std::log(4.0), "bce ln 4");

  // Zero network: every probability is 1/2 and every score 0.
  const Architecture arch{4, {3}};
  const Model zero{arch, Network<float>::zeros(arch), 1.0};
  const std::vector<double> u{0.3, -0.7}, p{1.1, 0.4};
  const TripletFeatures t{{u, u, u}, p, {1, 1, 0}};
  TrainConfig cfg;
  near(combined_loss(zero, t, cfg), 0.9 * std::log(2.0) + 0.1, "lambda 0.9 mix");

  // Endpoints on a random model are exact.
  const auto model = init_model(arch, 7);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    std::array<std::vector<double>, 4> v;
    for (auto& x : v) x = {rng.normal(), rng.normal()};
    const TripletFeatures f{{v[0], v[1], v[2]}, v[3], {0, 0, 1}};
    std::array<double, 3> s{};
    double bce = 0.0;
    for (int i = 0; i < 3; ++i) {
      s[i] = suscep_score(model, v[i], v[3]);
      bce += bce_loss(repost_prob(model, v[i], v[3]), f.labels[i]);
    }
    cfg.lambda = 1.0;
    c.expect(combined_loss(model, f, cfg) == bce / 3.0, "lambda 1 is mean BCE");
    cfg.lambda = 0.0;
    c.expect(combined_loss(model, f, cfg) == triplet_loss(s[0], s[1], s[2], 1.0), "lambda 0 is the triplet term");
  }
  return c.verdict("closed-form values within 1e-12; endpoints exact on 50 random triplets");
}

struct RecoveryRun {
  double positive_rate = 0.0;
  double accuracy = 0.0;
  double spearman = 0.0;
  double agreement = 0.0;
  double baseline = 0.0;
  DistributionStats train_scores;
};

RecoveryRun recovery_run(std::uint64_t seed) {
  SynthConfig sc;
  sc.n_users = 1000;
  sc.n_misinfo_posts = 200;
  sc.dim = 32;
  sc.follow_prob = 0.05;
  sc.teacher_hidden = {32, 16};
  sc.teacher_seed = seed * 101;
  sc.data_seed = seed * 7 + 3;
  const auto data = gen_synthetic(sc);

  BuildPairsOptions bo;
  bo.seed = seed;
  const auto pairs = split_pairs(build_pairs(data.corpus, data.table, bo), {}, seed);
  RecoveryRun r;
  for (const auto& p : pairs.pairs) r.positive_rate += p.label;
  r.positive_rate /= static_cast<double>(pairs.size());

  FeatureStore features(data.corpus, data.table, {});
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.lambda = 0.9;
  tc.margin = 1.0;
  tc.epochs = 100;
  tc.seed = seed;
  const auto fitted = fit(init_model({64, {32, 16}}, seed + 1000), pairs, features, tc);

  r.accuracy = classify_metrics(fitted.model, pairs, Split::Test, features).accuracy;
  const auto rep = recovery_report(fitted.model, data.truth.user_overall, features, data.corpus.misinfo_post_ids(), 2000, seed);
  r.spearman = rep.spearman_overall;
  r.agreement = rep.pairwise_agreement_vs_teacher;
  r.baseline = rep.baseline_agreement;
  const std::vector<Split> train{Split::Train};
  r.train_scores = score_distribution(fitted.model, pairs, train, features);
  return r;
}

Verdict latent_recovery(const std::vector<RecoveryRun>& runs, double secs) {
  Checker c;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    c.expect(r.positive_rate >= 0.4 && r.positive_rate <= 0.6, fmt::format("seed {} positive rate {:.3f}", i + 1, r.positive_rate));
    c.expect(r.accuracy >= 70.0, fmt::format("seed {} accuracy {:.2f}", i + 1, r.accuracy));
    c.expect(r.spearman >= 0.6, fmt::format("seed {} spearman {:.3f}", i + 1, r.spearman));
    detail += fmt::format("{}seed {}: pos rate {:.3f}, test acc {:.2f}, spearman {:.3f}", i ? "; " : "", i + 1,
                          r.positive_rate, r.accuracy, r.spearman);
  }
  c.expect(secs < 300.0, fmt::format("runtime {:.0f} s", secs));
  return c.verdict(fmt::format("{} ({:.0f} s)", detail, secs));
}

Verdict baseline_ordering(const std::vector<RecoveryRun>& runs) {
  int wins = 0;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    wins += runs[i].agreement > runs[i].baseline;
    detail += fmt::format("{}seed {}: {:.2f} vs {:.2f}", i ? "; " : "", i + 1, runs[i].agreement, runs[i].baseline);
  }
  return {wins >= 2, fmt::format("model beats cosine baseline in {}/3 ({})", wins, detail)};
}

Verdict distribution_separation(const std::vector<RecoveryRun>& runs) {
  Checker c;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& d = runs[i].train_scores;
    c.expect(d.pos_mean > d.neg_mean, fmt::format("seed {} means {:.4f} <= {:.4f}", i + 1, d.pos_mean, d.neg_mean));
    c.expect(d.p_value < 1e-3, fmt::format("seed {} p {:.3g}", i + 1, d.p_value));
    detail += fmt::format("{}seed {}: {:.4f} vs {:.4f}, p {:.3g}", i ? "; " : "", i + 1, d.pos_mean, d.neg_mean, d.p_value);
  }
  return c.verdict(detail);
}

Verdict heuristic_oracle() {
  Checker c;
  Rng rng(606);
  std::size_t posts = 0, pair_sets = 0;
  for (int k = 0; k < 50; ++k) {
    const auto toy = testing::random_toy_corpus(rng, 30, 10);
    c.expect(toy.corpus.users().size() <= 30 && toy.corpus.posts().size() <= 10, "toy corpus size");
    for (const auto& id : toy.corpus.misinfo_post_ids()) {
      c.expect(infer_negative_candidates(toy.corpus, id, {}) == testing::brute_negatives(toy.corpus, id, 10, 2),
               fmt::format("corpus {} post {} negatives", k, id));
      ++posts;
    }
    const auto expected = testing::brute_pairs(toy.corpus, toy.table);
    if (expected.empty()) {
      c.expect(testing::code_of([&] { build_pairs(toy.corpus, toy.table, {}); }) == ErrorCode::EmptyResult,
               fmt::format("corpus {} empty result", k));
    } else {
      c.expect(build_pairs(toy.corpus, toy.table, {}).pairs == expected, fmt::format("corpus {} pairs", k));
      ++pair_sets;
    }
  }
  return c.verdict(fmt::format("50 corpora, {} posts' candidates and {} non-empty pair sets identical", posts, pair_sets));
}

Verdict smoothing_and_statistics() {
  Checker c;
  Rng rng(77);
  for (int k = 0; k < 100; ++k) {
    const double mean = rng.normal() * 20, mu0 = rng.normal() * 5, strength = rng.uniform(0.5, 50);
    const auto n = static_cast<std::size_t>(1 + rng.below(200));
    const std::vector<GroupStat> empty{{"g", 0, mean}}, full{{"g", n, mean}};
    c.expect(bayes_smooth(empty, {mu0, strength, 0})[0].mean == mu0, "n = 0 gives the prior mean");
    c.expect(bayes_smooth(full, {mu0, 0.0, 0})[0].mean == mean, "C = 0 gives the sample mean");
    const std::vector<GroupStat> balanced{{"g", n, mean}};
    const double mid = bayes_smooth(balanced, {mu0, static_cast<double>(n), 0})[0].mean;
    c.expect(std::abs(mid - (mean + mu0) / 2) <= 1e-12 * (1 + std::abs(mean) + std::abs(mu0)), "n = C midpoint");
  }
  const std::vector<GroupStat> four{{"g", 20, 4.0}};
  c.expect(bayes_smooth(four, {0.0, 20.0, 0})[0].mean == 2.0, "midpoint of 4 and 0");

  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= 1e-12, fmt::format("{}: {:.17g} vs {:.17g}", what, got, want));
  };
  const std::vector<double> x3{1, 2, 3}, y3{1, 3, 2}, x4{1, 2, 3, 4}, y4{1, 3, 2, 4}, z4{2, 4, 5, 9}, t4{1, 2, 2, 3};
  near(pearson(x3, y3), 0.5, "pearson (1,2,3)/(1,3,2)");
  near(pearson(x4, z4), 11.0 / std::sqrt(130.0), "pearson (1,2,3,4)/(2,4,5,9)");
  near(spearman(x4, y4), 0.8, "spearman (1,2,3,4)/(1,3,2,4)");
  near(spearman(t4, x4), 4.5 / std::sqrt(22.5), "spearman with ties");

  int bracketed = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<ComparisonRecord> recs;
    const auto n = 10 + rng.below(300);
    const double p = rng.uniform(0.2, 0.95);
    for (std::uint64_t i = 0; i < n; ++i) recs.push_back({"a", "b", Choice::A, rng.bernoulli(p) ? Choice::A : Choice::B});
    const auto a = rank_agreement(recs, 2000, k);
    const bool ok = a.ci_low <= a.agreement && a.agreement <= a.ci_high;
    bracketed += ok;
    c.expect(ok, fmt::format("set {}: [{}, {}] misses {}", k, a.ci_low, a.ci_high, a.agreement));
  }
  return c.verdict(fmt::format("smoothing identities exact on 100 draws; correlations within 1e-12; CI brackets {}/100", bracketed));
}

Verdict determinism() {
  Checker c;
  testing::TempDir dir;
  auto chain = [&](const std::string& name) {
    SynthConfig sc;
    sc.dim = 16;
    sc.teacher_hidden = {16, 8};
    const auto data = gen_synthetic(sc);
    const auto out = dir / name;
    save_synthetic(data, SynthPaths::in_directory(out));
    const auto corpus = load_corpus(SynthPaths::in_directory(out).corpus);
    const auto table = load_table(SynthPaths::in_directory(out).embeddings);
    BuildPairsOptions bo;
    bo.seed = 4;
    const auto pairs = split_pairs(build_pairs(corpus, table, bo), {}, 4);
    FeatureStore features(corpus, table, {});
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.epochs = 10;
    tc.seed = 4;
    const auto fitted = fit(init_model({32, {32, 16}}, 4), pairs, features, tc);
    save_history_csv(fitted.history, out / "history.csv");
    save_model(fitted.model, out / "model.json");
    const auto m = classify_metrics(fitted.model, pairs, Split::Test, features);
    return std::make_pair(out, m.accuracy);
  };
  const auto [a, acc_a] = chain("a");
  const auto [b, acc_b] = chain("b");
  c.expect(testing::slurp(a / "history.csv") == testing::slurp(b / "history.csv"), "history CSV differs");
  c.expect(testing::slurp(a / "model.json") == testing::slurp(b / "model.json"), "checkpoint differs");
  c.expect(testing::slurp(a / "interactions.jsonl") == testing::slurp(b / "interactions.jsonl"), "corpus differs");
  c.expect(acc_a == acc_b, "evaluation differs");
  return c.verdict("synth -> pairs -> train -> eval twice: history and checkpoint byte-identical");
}

}  // namespace

int main() {
  struct Row {
    int id;
    const char* name;
    Verdict verdict;
  };
  std::vector<Row> rows;
  auto guarded = [](const std::function<Verdict()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Verdict{false, std::string("exception: ") + e.what()};
    }
  };

  rows.push_back({1, "gradient correctness", guarded(gradient_correctness)});
  rows.push_back({2, "loss algebra", guarded(loss_algebra)});

  std::vector<RecoveryRun> runs;
  double recovery_secs = 0.0;
  const auto recovery = guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 1; seed <= 3; ++seed) runs.push_back(recovery_run(seed));
    recovery_secs = seconds_since(t0);
    return latent_recovery(runs, recovery_secs);
  });
  rows.push_back({3, "latent recovery", recovery});
  if (runs.size() == 3) {
    rows.push_back({4, "baseline ordering", guarded([&] { return baseline_ordering(runs); })});
    rows.push_back({5, "distribution separation", guarded([&] { return distribution_separation(runs); })});
  } else {
    rows.push_back({4, "baseline ordering", {false, "recovery runs did not complete"}});
    rows.push_back({5, "distribution separation", {false, "recovery runs did not complete"}});
  }
  rows.push_back({6, "heuristic oracle equivalence", guarded(heuristic_oracle)});
  rows.push_back({7, "smoothing and statistics", guarded(smoothing_and_statistics)});
  rows.push_back({8, "determinism", guarded(determinism)});

  bool all = true;
  for (const auto& r : rows) {
    std::cout << fmt::format("[{}] criterion {} {}: {}\n", r.verdict.pass ? "PASS" : "FAIL", r.id, r.name, r.verdict.detail);
    all = all && r.verdict.pass;
  }
  std::cout << (all ? "all acceptance criteria passed\n" : "acceptance criteria FAILED\n");
  return all ? 0 : 1;
}
