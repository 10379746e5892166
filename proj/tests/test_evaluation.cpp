#include <doctest.h>

#include <cmath>

#include "suscept/evaluation.hpp"
#include "support.hpp"

using namespace suscept;
using testing::code_of;
using testing::kT0;
using testing::TempDir;

namespace {

// One-dimensional embeddings; raw score = relu(post) - 1, so a post vector
// 1 + a scores a.
Model post_driven_model() {
  Model m{{2, {1}}, Network<float>::zeros({2, {1}}), 1.0};
  m.net.layers[0].w = {0.0f, 1.0f};
  m.net.layers[1].w = {1.0f};
  m.net.layers[1].b = {-1.0f};
  return m;
}

// User "u" posts an original at kT0 with vector [1]; misinformation posts
// m0..m4 are created 1, 3, 5, 12 and 20 days later, so only the first three
// fall within the profile window.
struct ScoringFixture {
  Corpus corpus;
  EmbeddingTable table{1};
  std::vector<std::string> misinfo{"m0", "m1", "m2", "m3", "m4"};

  explicit ScoringFixture(const std::vector<float>& post_values) {
    const Timestamp days[] = {1, 3, 5, 12, 20};
    std::vector<Post> posts{{"o", "u", kT0, false, {}}};
    for (std::size_t i = 0; i < misinfo.size(); ++i) {
      posts.push_back({misinfo[i], "w", kT0 + days[i] * kSecondsPerDay, true, {}});
      table.insert(misinfo[i], {post_values[i]});
    }
    table.insert("o", {1.0f});
    corpus = Corpus::build(posts, {{"u", {}, {}}, {"w", {}, {}}}, {{"u", "o", InteractionKind::Original, kT0}}, {});
  }
};

std::vector<ComparisonRecord> random_records(Rng& rng, std::size_t n, double p_correct) {
  std::vector<ComparisonRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Choice gold = rng.bernoulli(0.5) ? Choice::A : Choice::B;
    const Choice pred = rng.bernoulli(p_correct) ? gold : (gold == Choice::A ? Choice::B : Choice::A);
    out.push_back({"a" + std::to_string(i), "b" + std::to_string(i), gold, pred});
  }
  return out;
}

}  // namespace

TEST_CASE("overall score") {
  const auto model = post_driven_model();
  SUBCASE("opposite scores cancel") {
    ScoringFixture f({1.5f, 0.5f, 9.0f, 9.0f, 9.0f});
    const std::vector<std::string> two{"m0", "m1"};
    FeatureStore fs(f.corpus, f.table, {});
    const auto s = overall_score(model, fs, "u", two);
    CHECK(s.score == 0.0);
    CHECK(s.n_posts == 2);
    CHECK(normalize_score(model, 0.5) == doctest::Approx(46.211715726));
  }
  SUBCASE("single post") {
    ScoringFixture f({1.25f, 0, 0, 0, 0});
    FeatureStore fs(f.corpus, f.table, {});
    const std::vector<std::string> one{"m0"};
    const auto s = overall_score(model, fs, "u", one);
    CHECK(s.score == normalize_score(model, 0.25));
    CHECK(s.n_posts == 1);
  }
  SUBCASE("only posts with a profile count") {
    ScoringFixture f({1.1f, 1.7f, 2.3f, 4.0f, 8.0f});
    FeatureStore fs(f.corpus, f.table, {});
    const auto s = overall_score(model, fs, "u", f.misinfo);
    CHECK(s.n_posts == 3);
    double sum = 0.0;
    for (float v : {1.1f, 1.7f, 2.3f}) sum += normalize_score(model, static_cast<double>(v) - 1.0);
    CHECK(s.score == doctest::Approx(sum / 3.0).epsilon(1e-14));
    CHECK(code_of([&] { overall_score(model, fs, "w", f.misinfo); }) == ErrorCode::NoScorablePosts);
    const std::vector<std::string> users{"u", "w"};
    const auto all = score_users(model, fs, users, f.misinfo);
    REQUIRE(all.size() == 1);
    CHECK(all[0].user_id == "u");
  }
}

TEST_CASE("scores CSV roundtrip") {
  TempDir dir;
  const std::vector<UserScore> s{{"a", -7.807, 3}, {"b", 1.0 / 3.0, 1}};
  save_scores_csv(s, dir / "s.csv");
  const auto back = load_scores_csv(dir / "s.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].score == -7.807);
  CHECK(back[1].score == 1.0 / 3.0);
  CHECK(back[1].n_posts == 1);
}

TEST_CASE("comparisons") {
  CHECK(more_susceptible(2.0, 1.0) == Choice::A);
  CHECK(more_susceptible(1.0, 2.0) == Choice::B);
  CHECK(more_susceptible(1.0, 1.0) == Choice::A);

  TempDir dir;
  testing::spit(dir / "c.csv", "user_a,user_b,gold\nx,y,B\nx,z,a\n");
  const auto recs = load_comparisons_csv(dir / "c.csv");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].gold == Choice::B);
  CHECK(recs[1].gold == Choice::A);
  save_comparisons_csv(recs, dir / "d.csv");
  const auto again = load_comparisons_csv(dir / "d.csv");
  CHECK(again[0].gold == Choice::B);
  testing::spit(dir / "bad.csv", "user_a,user_b,gold\nx,y,C\n");
  CHECK(code_of([&] { load_comparisons_csv(dir / "bad.csv"); }) == ErrorCode::ParseError);
}

TEST_CASE("rank agreement") {
  std::vector<ComparisonRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({"a", "b", Choice::A, Choice::A});
  auto a = rank_agreement(recs, 1000, 1);
  CHECK(a.agreement == 100.0);
  CHECK(a.ci_low == 100.0);
  CHECK(a.ci_high == 100.0);
  for (int i = 0; i < 3; ++i) recs[i].pred = Choice::B;
  CHECK(rank_agreement(recs, 1000, 1).agreement == 70.0);
  CHECK(rank_agreement(recs, 500, 7).ci_low == rank_agreement(recs, 500, 7).ci_low);
  CHECK(code_of([] { rank_agreement({}, 10, 0); }) == ErrorCode::EmptyInput);

  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = random_records(rng, 20 + rng.below(200), rng.uniform(0.3, 0.95));
    const auto ag = rank_agreement(r, 2000, trial);
    CHECK(ag.ci_low <= ag.agreement);
    CHECK(ag.agreement <= ag.ci_high);
    CHECK(ag.ci_low >= 0.0);
    CHECK(ag.ci_high <= 100.0);
  }
}

TEST_CASE("cosine") {
  const std::vector<double> a{0.3, -2.0, 1.0}, b{1.0, 0.0}, c{0.0, 5.0}, d{1.0, 1.0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(b, c) == 0.0);
  CHECK(cosine_similarity(d, b) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  const std::vector<double> zero{0.0, 0.0};
  CHECK(code_of([&] { cosine_similarity(zero, b); }) == ErrorCode::ZeroVector);

  ScoringFixture f({1.0f, -1.0f, 2.0f, 2.0f, 2.0f});
  FeatureStore fs(f.corpus, f.table, {});
  CHECK(cosine_baseline_score(fs, "u", "m0") == 1.0);
  CHECK(cosine_baseline_score(fs, "u", "m1") == -1.0);
  const auto overall = cosine_baseline_overall(fs, "u", f.misinfo);
  CHECK(overall.n_posts == 3);
  CHECK(overall.score == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("confusion metrics") {
  const auto perfect = confusion_metrics(5, 0, 5, 0);
  CHECK(perfect.accuracy == 100.0);
  CHECK(perfect.f1 == 100.0);
  const auto always_yes = confusion_metrics(5, 5, 0, 0);
  CHECK(always_yes.accuracy == 50.0);
  CHECK(always_yes.recall == 100.0);
  const auto never = confusion_metrics(0, 0, 5, 5);
  CHECK(never.precision == 0.0);
  CHECK(never.f1 == 0.0);
  CHECK(code_of([] { confusion_metrics(0, 0, 0, 0); }) == ErrorCode::EmptySplit);
}

TEST_CASE("classify_metrics matches a naive count") {
  Rng rng(8);
  const auto toy = testing::random_toy_corpus(rng, 30, 10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = init_model({6, {4}}, trial);
    PairSet set;
    for (const auto& [u, _] : toy.corpus.users()) {
      for (const auto& m : toy.corpus.misinfo_post_ids()) {
        set.pairs.push_back({u, m, static_cast<int>(rng.below(2)), Split::Test});
      }
    }
    FeatureStore fs(toy.corpus, toy.table, {});
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& p : set.pairs) {
      if (!toy.table.find(p.post_id)) continue;
      const auto t = toy.corpus.posts().at(p.post_id).created_at;
      if (!testing::brute_has_profile(toy.corpus, p.user_id, t)) continue;
      const auto prof = user_profile_embedding(toy.corpus, toy.table, p.user_id, t, {});
      const auto post = to_double(*toy.table.find(p.post_id));
      const bool yes = repost_prob(model, prof, post) >= 0.5;
      if (yes && p.label) ++tp;
      if (yes && !p.label) ++fp;
      if (!yes && !p.label) ++tn;
      if (!yes && p.label) ++fn;
    }
    if (tp + fp + tn + fn == 0) {
      CHECK(code_of([&] { classify_metrics(model, set, Split::Test, fs); }) == ErrorCode::EmptySplit);
      continue;
    }
    const auto m = classify_metrics(model, set, Split::Test, fs);
    CHECK(m.accuracy == doctest::Approx(100.0 * (tp + tn) / (tp + fp + tn + fn)));
    if (tp + fp > 0) CHECK(m.precision == doctest::Approx(100.0 * tp / (tp + fp)));
    if (tp + fn > 0) CHECK(m.recall == doctest::Approx(100.0 * tp / (tp + fn)));
  }
}

TEST_CASE("Welch test") {
  SUBCASE("separated constants") {
    const std::vector<double> pos(50, 1.0), neg(50, -1.0);
    const auto s = welch_test(pos, neg);
    CHECK(s.pos_mean == 1.0);
    CHECK(s.neg_mean == -1.0);
    CHECK(s.p_value < 1e-10);
  }
  SUBCASE("two-by-two closed form") {
    // equal variances and n = 2 give 2 degrees of freedom, where the
    // two-sided p is 1 - |t| / sqrt(2 + t^2)
    const std::vector<double> pos{1.0, 3.0}, neg{0.0, 2.0};
    const auto s = welch_test(pos, neg);
    const double t = 1.0 / std::sqrt(2.0);
    CHECK(s.welch_t == doctest::Approx(t).epsilon(1e-14));
    CHECK(s.dof == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s.p_value == doctest::Approx(1.0 - t / std::sqrt(2.0 + t * t)).epsilon(1e-12));
    CHECK(s.pos_std == doctest::Approx(std::sqrt(2.0)));
  }
  SUBCASE("one degree of freedom in the limit") {
    // one group constant: dof = n - 1 of the other group
    const std::vector<double> pos{0.0, 4.0}, neg{1.0, 1.0};
    const auto s = welch_test(pos, neg);
    CHECK(s.dof == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.p_value == doctest::Approx(1.0 - 2.0 * std::atan(std::abs(s.welch_t)) / M_PI).epsilon(1e-12));
  }
  SUBCASE("same distribution rarely looks significant") {
    Rng rng(31);
    int significant = 0;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> a(40), b(40);
      for (auto& x : a) x = rng.normal();
      for (auto& x : b) x = rng.normal();
      const auto s = welch_test(a, b);
      CHECK(s.p_value >= 0.0);
      CHECK(s.p_value <= 1.0);
      significant += s.p_value < 0.05;
    }
    CHECK(significant < 20);
  }
  const std::vector<double> one{1.0}, two{1.0, 2.0};
  CHECK(code_of([&] { welch_test(one, two); }) == ErrorCode::DegenerateGroup);
}
