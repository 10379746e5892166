#include "suscept/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>

#include "suscept/analysis.hpp"
#include "suscept/error.hpp"
#include "suscept/evaluation.hpp"
#include "suscept/io.hpp"
#include "suscept/logging.hpp"
#include "suscept/model.hpp"
#include "suscept/pairs.hpp"
#include "suscept/synth.hpp"
#include "suscept/training.hpp"

namespace suscept::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every setting a subcommand can read, after merging the config file with
// command-line flags.
struct RunConfig {
  std::uint64_t seed = 0;
  fs::path out = ".";

  fs::path posts, users, interactions, follows;
  fs::path embeddings, pairs, model, scores, comparisons, factors, truth, report, input;

  TrainConfig train;
  std::vector<std::size_t> hidden{256, 64};
  ProfileConfig profile;
  NegativeHeuristic heuristic;
  std::size_t neg_per_post = 0;  // 0 = unlimited
  SplitRatios ratios;

  double prior_strength = 20.0;
  std::optional<double> prior_mean;
  std::optional<double> reference_mean;
  std::string group_by = "state";

  std::size_t bootstrap_n = 10000;
  double threshold = 0.5;
  std::size_t n_comparisons = 2000;

  SynthConfig synth;
  std::optional<std::uint64_t> teacher_seed;
  std::optional<std::uint64_t> data_seed;
};

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  std::size_t used = 0;
  try {
    if constexpr (std::is_same_v<T, double>) {
      value = std::stod(text, &used);
    } else if constexpr (std::is_same_v<T, int>) {
      value = std::stoi(text, &used);
    } else {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
      value = static_cast<T>(std::stoull(text, &used));
    }
  } catch (const std::exception&) {
    throw UsageError(fmt::format("invalid value '{}' for {}", text, key));
  }
  if (used != text.size()) throw UsageError(fmt::format("invalid value '{}' for {}", text, key));
  return value;
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_value<std::size_t>(key, part));
  if (out.empty()) throw UsageError(key + " needs at least one width");
  return out;
}

struct Setting {
  std::string key;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> apply;
};

std::vector<Setting> settings() {
  using R = RunConfig;
  auto path = [](fs::path R::*member) {
    return [member](R& c, const std::string& v) { c.*member = v; };
  };
  std::vector<Setting> s = {
      {"seed", "seed for every random choice", [](R& c, const std::string& v) { c.seed = parse_value<std::uint64_t>("seed", v); }},
      {"out", "output directory", path(&R::out)},
      {"posts", "posts.jsonl", path(&R::posts)},
      {"users", "users.jsonl", path(&R::users)},
      {"interactions", "interactions.jsonl", path(&R::interactions)},
      {"follows", "follows.jsonl", path(&R::follows)},
      {"embeddings", "EMB1 embedding table", path(&R::embeddings)},
      {"pairs", "pairs.jsonl", path(&R::pairs)},
      {"model", "model checkpoint (JSON)", path(&R::model)},
      {"scores", "user scores CSV", path(&R::scores)},
      {"comparisons", "comparison records CSV (user_a,user_b,gold)", path(&R::comparisons)},
      {"factors", "factors CSV (user_id,post_id,factor,value)", path(&R::factors)},
      {"truth", "synthetic ground truth (truth_users.csv)", path(&R::truth)},
      {"report", "CSV or JSON report to print", path(&R::report)},
      {"input", "embedding JSONL to import ({\"id\",\"vector\"})", path(&R::input)},
      {"learning_rate", "optimizer step size", [](R& c, const std::string& v) { c.train.learning_rate = parse_value<double>("learning_rate", v); }},
      {"lambda", "weight of the classification loss", [](R& c, const std::string& v) { c.train.lambda = parse_value<double>("lambda", v); }},
      {"margin", "triplet margin", [](R& c, const std::string& v) { c.train.margin = parse_value<double>("margin", v); }},
      {"epochs", "training epochs", [](R& c, const std::string& v) { c.train.epochs = parse_value<int>("epochs", v); }},
      {"batch_size", "triplets per batch", [](R& c, const std::string& v) { c.train.batch_size = parse_value<int>("batch_size", v); }},
      {"optimizer", "adam or sgd", [](R& c, const std::string& v) {
         if (v == "adam") c.train.optimizer = OptimizerKind::Adam;
         else if (v == "sgd") c.train.optimizer = OptimizerKind::Sgd;
         else throw UsageError("optimizer must be adam or sgd");
       }},
      {"prob_clamp", "probability clamp inside the BCE", [](R& c, const std::string& v) { c.train.prob_clamp = parse_value<double>("prob_clamp", v); }},
      {"hidden", "hidden layer widths, comma separated", [](R& c, const std::string& v) { c.hidden = parse_widths("hidden", v); }},
      {"window_days", "profile window in days", [](R& c, const std::string& v) { c.profile.window_days = parse_value<int>("window_days", v); }},
      {"profile_kinds", "interaction kinds used for profiles, comma separated", [](R& c, const std::string& v) {
         c.profile.source_kinds.clear();
         std::stringstream ss(v);
         std::string part;
         while (std::getline(ss, part, ',')) {
           try {
             c.profile.source_kinds.insert(parse_interaction_kind(part));
           } catch (const Error&) {
             throw UsageError("unknown interaction kind '" + part + "'");
           }
         }
       }},
      {"pre_days", "negative heuristic: days before the post", [](R& c, const std::string& v) { c.heuristic.pre_days = parse_value<int>("pre_days", v); }},
      {"post_days", "negative heuristic: days after the post", [](R& c, const std::string& v) { c.heuristic.post_days = parse_value<int>("post_days", v); }},
      {"neg_per_post", "cap on negatives per post (0 = unlimited)", [](R& c, const std::string& v) { c.neg_per_post = parse_value<std::size_t>("neg_per_post", v); }},
      {"train_ratio", "train share", [](R& c, const std::string& v) { c.ratios.train = parse_value<double>("train_ratio", v); }},
      {"val_ratio", "validation share", [](R& c, const std::string& v) { c.ratios.val = parse_value<double>("val_ratio", v); }},
      {"test_ratio", "test share", [](R& c, const std::string& v) { c.ratios.test = parse_value<double>("test_ratio", v); }},
      {"prior_strength", "smoothing pseudo-count", [](R& c, const std::string& v) { c.prior_strength = parse_value<double>("prior_strength", v); }},
      {"prior_mean", "smoothing prior mean (default: mean of all scores)", [](R& c, const std::string& v) { c.prior_mean = parse_value<double>("prior_mean", v); }},
      {"reference_mean", "threshold for above_reference (default: mean of all scores)", [](R& c, const std::string& v) { c.reference_mean = parse_value<double>("reference_mean", v); }},
      {"group_by", "occupation or state", [](R& c, const std::string& v) {
         if (v != "occupation" && v != "state") throw UsageError("group_by must be occupation or state");
         c.group_by = v;
       }},
      {"bootstrap_n", "bootstrap resamples", [](R& c, const std::string& v) { c.bootstrap_n = parse_value<std::size_t>("bootstrap_n", v); }},
      {"threshold", "repost probability threshold", [](R& c, const std::string& v) { c.threshold = parse_value<double>("threshold", v); }},
      {"n_comparisons", "random user pairs in the recovery report", [](R& c, const std::string& v) { c.n_comparisons = parse_value<std::size_t>("n_comparisons", v); }},
      {"n_users", "synthetic users", [](R& c, const std::string& v) { c.synth.n_users = parse_value<std::size_t>("n_users", v); }},
      {"n_misinfo_posts", "synthetic misinformation posts", [](R& c, const std::string& v) { c.synth.n_misinfo_posts = parse_value<std::size_t>("n_misinfo_posts", v); }},
      {"n_profile_posts", "synthetic profile posts per user", [](R& c, const std::string& v) { c.synth.n_profile_posts_per_user = parse_value<std::size_t>("n_profile_posts", v); }},
      {"dim", "synthetic embedding dimension", [](R& c, const std::string& v) { c.synth.dim = static_cast<std::uint32_t>(parse_value<std::size_t>("dim", v)); }},
      {"follow_prob", "synthetic follow probability", [](R& c, const std::string& v) { c.synth.follow_prob = parse_value<double>("follow_prob", v); }},
      {"teacher_hidden", "synthetic teacher hidden widths", [](R& c, const std::string& v) { c.synth.teacher_hidden = parse_widths("teacher_hidden", v); }},
      {"teacher_score_rms", "RMS of the synthetic teacher scores", [](R& c, const std::string& v) { c.synth.teacher_score_rms = parse_value<double>("teacher_score_rms", v); }},
      {"anisotropy", "shared-direction weight of synthetic embeddings", [](R& c, const std::string& v) { c.synth.anisotropy = parse_value<double>("anisotropy", v); }},
      {"teacher_seed", "synthetic teacher seed (default: seed)", [](R& c, const std::string& v) { c.teacher_seed = parse_value<std::uint64_t>("teacher_seed", v); }},
      {"data_seed", "synthetic data seed (default: seed + 1)", [](R& c, const std::string& v) { c.data_seed = parse_value<std::uint64_t>("data_seed", v); }},
  };
  return s;
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::vector<std::string> lines;
  try {
    lines = read_lines(path);
  } catch (const Error&) {
    throw UsageError("cannot read config file " + path.string());
  }
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(fmt::format("{}:{}: expected key = value", path.string(), i + 1));
    out[normalize_key(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
  }
  return out;
}

void validate(const RunConfig& c) {
  c.train.validate();
  Architecture{2, c.hidden}.validate();
  c.profile.validate();
  c.heuristic.validate();
  SmoothingConfig{0.0, c.prior_strength, 0.0}.validate();
  const auto& r = c.ratios;
  if (!(r.train > 0 && r.val > 0 && r.test > 0) || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw UsageError("split ratios must be positive and sum to 1");
  }
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw UsageError("threshold must lie in (0, 1)");
  c.synth.validate();
}

void require(const fs::path& p, const char* key) {
  if (p.empty()) throw UsageError(fmt::format("--{} is required", normalize_key(key)));
}

CorpusPaths corpus_paths(const RunConfig& c) {
  require(c.posts, "posts");
  require(c.users, "users");
  require(c.interactions, "interactions");
  require(c.follows, "follows");
  return {c.posts, c.users, c.interactions, c.follows};
}

// Usage checks per command, run before any file is touched.
void check_required(const std::string& cmd, const RunConfig& c) {
  if (cmd == "ingest") corpus_paths(c);
  if (cmd == "embed-import") require(c.input, "input");
  if (cmd == "build-pairs") {
    corpus_paths(c);
    require(c.embeddings, "embeddings");
  }
  if (cmd == "split") require(c.pairs, "pairs");
  if (cmd == "train" || cmd == "eval-retweet") {
    corpus_paths(c);
    require(c.embeddings, "embeddings");
    require(c.pairs, "pairs");
    if (cmd == "eval-retweet") require(c.model, "model");
  }
  if (cmd == "score-users" || cmd == "recover") {
    corpus_paths(c);
    require(c.embeddings, "embeddings");
    require(c.model, "model");
    if (cmd == "recover") require(c.truth, "truth");
  }
  if (cmd == "eval-compare") {
    require(c.comparisons, "comparisons");
    require(c.scores, "scores");
  }
  if (cmd == "analyze-factors") {
    require(c.factors, "factors");
    require(c.scores, "scores");
  }
  if (cmd == "analyze-community") {
    require(c.users, "users");
    require(c.scores, "scores");
  }
  if (cmd == "report") require(c.report, "report");
}

std::map<std::string, double> score_map(const std::vector<UserScore>& scores) {
  std::map<std::string, double> out;
  for (const auto& s : scores) out[s.user_id] = s.score;
  return out;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& doc) {
  write_file_atomic(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

int execute(const std::string& cmd, const RunConfig& c, std::ostream& out) {
  if (cmd == "report") {
    print_report(c.report, out);
    return 0;
  }
  fs::create_directories(c.out);

  if (cmd == "synth-gen") {
    auto cfg = c.synth;
    cfg.teacher_seed = c.teacher_seed.value_or(c.seed);
    cfg.data_seed = c.data_seed.value_or(c.seed + 1);
    const auto data = gen_synthetic(cfg);
    save_synthetic(data, SynthPaths::in_directory(c.out));
    out << fmt::format("wrote synthetic corpus: {} users, {} posts, {} interactions, {} follows to {}\n",
                       data.corpus.users().size(), data.corpus.posts().size(), data.corpus.interactions().size(),
                       data.corpus.follows().size(), c.out.string());
    return 0;
  }
  if (cmd == "embed-import") {
    std::optional<EmbeddingTable> table;
    const auto lines = read_lines(c.input);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
      try {
        const auto o = nlohmann::json::parse(lines[i]);
        auto v = o.at("vector").get<std::vector<float>>();
        if (!table) table.emplace(static_cast<std::uint32_t>(v.size()));
        table->insert(o.at("id").get<std::string>(), std::move(v));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", c.input.string(), i + 1, e.what()));
      }
    }
    if (!table) throw Error(ErrorCode::EmptyInput, "no embeddings in " + c.input.string());
    save_table(*table, c.out / "embeddings.emb1");
    out << fmt::format("imported {} vectors of dim {}\n", table->size(), table->dim());
    return 0;
  }
  if (cmd == "split") {
    auto pairs = split_pairs(load_pairs(c.pairs), c.ratios, c.seed);
    save_pairs(pairs, c.out / "pairs_split.jsonl");
    out << fmt::format("train {} / val {} / test {}\n", pairs.count(Split::Train), pairs.count(Split::Val),
                       pairs.count(Split::Test));
    return 0;
  }
  if (cmd == "eval-compare") {
    auto records = load_comparisons_csv(c.comparisons);
    const auto scores = score_map(load_scores_csv(c.scores));
    std::vector<ComparisonRecord> kept;
    for (auto& r : records) {
      auto a = scores.find(r.user_a);
      auto b = scores.find(r.user_b);
      if (a == scores.end() || b == scores.end()) {
        log().info("skipping comparison {} vs {}: missing score", r.user_a, r.user_b);
        continue;
      }
      r.pred = more_susceptible(a->second, b->second);
      kept.push_back(r);
    }
    const auto agreement = rank_agreement(kept, c.bootstrap_n, c.seed);
    save_comparisons_csv(kept, c.out / "comparisons_scored.csv");
    write_json(c.out / "agreement.json", {{"agreement", agreement.agreement},
                                          {"ci_low", agreement.ci_low},
                                          {"ci_high", agreement.ci_high},
                                          {"n", kept.size()}});
    out << fmt::format("agreement {:.2f}% (95% CI {:.2f} - {:.2f}) over {} comparisons\n", agreement.agreement,
                       agreement.ci_low, agreement.ci_high, kept.size());
    return 0;
  }
  if (cmd == "analyze-factors") {
    const auto rows = factor_correlations(load_factors_csv(c.factors), AggregationPolicy{},
                                          score_map(load_scores_csv(c.scores)));
    save_correlations_csv(rows, c.out / "correlations.csv");
    out << fmt::format("{} factors correlated\n", rows.size());
    return 0;
  }
  if (cmd == "analyze-community") {
    const auto scores = score_map(load_scores_csv(c.scores));
    std::map<std::string, std::string> grouping;
    {
      // Only the users file is needed; read it as a corpus of users alone.
      const auto lines = read_lines(c.users);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
        try {
          const auto o = nlohmann::json::parse(lines[i]);
          const auto key = o.value(c.group_by, nlohmann::json()).is_string() ? o.at(c.group_by).get<std::string>() : "";
          if (!key.empty()) grouping[o.at("id").get<std::string>()] = key;
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::ParseError, fmt::format("{}:{}: {}", c.users.string(), i + 1, e.what()));
        }
      }
    }
    std::map<std::string, double> grouped_scores;
    for (const auto& [u, s] : scores) {
      if (grouping.count(u)) grouped_scores[u] = s;
    }
    auto prior = prior_from_scores(grouped_scores.empty() ? scores : grouped_scores, c.prior_strength);
    if (c.prior_mean) prior.prior_mean = *c.prior_mean;
    const auto raw = community_scores(scores, grouping);
    const auto smoothed = bayes_smooth(raw, prior);
    export_group_table(smoothed, c.reference_mean.value_or(prior.prior_mean), c.out / "groups.csv");
    out << fmt::format("{} groups (prior mean {:.4f}, prior std {:.4f}, C = {})\n", smoothed.size(), prior.prior_mean,
                       prior.prior_std, prior.prior_strength);
    return 0;
  }

  // Commands below need the corpus.
  const Corpus corpus = load_corpus(corpus_paths(c));
  if (cmd == "ingest") {
    std::size_t misinfo = corpus.misinfo_post_ids().size();
    write_json(c.out / "corpus_summary.json", {{"posts", corpus.posts().size()},
                                               {"misinfo_posts", misinfo},
                                               {"users", corpus.users().size()},
                                               {"interactions", corpus.interactions().size()},
                                               {"follows", corpus.follows().size()}});
    out << fmt::format("corpus ok: {} posts ({} misinformation), {} users, {} interactions, {} follows\n",
                       corpus.posts().size(), misinfo, corpus.users().size(), corpus.interactions().size(),
                       corpus.follows().size());
    return 0;
  }

  const EmbeddingTable table = load_table(c.embeddings);
  FeatureStore features(corpus, table, c.profile);

  if (cmd == "build-pairs") {
    BuildPairsOptions opts{c.profile, c.heuristic, std::nullopt, c.seed};
    if (c.neg_per_post > 0) opts.negatives_per_post = c.neg_per_post;
    const auto pairs = build_pairs(corpus, table, opts);
    save_pairs(pairs, c.out / "pairs.jsonl");
    std::size_t pos = 0;
    for (const auto& p : pairs.pairs) pos += static_cast<std::size_t>(p.label);
    out << fmt::format("{} pairs ({} positive, {} negative)\n", pairs.size(), pos, pairs.size() - pos);
    return 0;
  }
  if (cmd == "train") {
    const auto pairs = load_pairs(c.pairs);
    auto cfg = c.train;
    cfg.seed = c.seed;
    const Model init = init_model({2 * static_cast<std::size_t>(table.dim()), c.hidden}, c.seed);
    const auto result = fit(init, pairs, features, cfg);
    save_model(result.model, c.out / "model.json");
    save_history_csv(result.history, c.out / "history.csv");
    const auto& best = result.history.epochs[result.history.best_epoch];
    out << fmt::format("best epoch {}: val loss {:.6f}, val accuracy {:.2f}%\n", result.history.best_epoch + 1,
                       best.val_loss, best.val_accuracy);
    return 0;
  }

  const Model model = load_model(c.model);
  const auto misinfo = corpus.misinfo_post_ids();
  if (cmd == "eval-retweet") {
    const auto pairs = load_pairs(c.pairs);
    const auto m = classify_metrics(model, pairs, Split::Test, features, c.threshold);
    const std::vector<Split> train_split{Split::Train};
    const auto d = score_distribution(model, pairs, train_split, features);
    write_json(c.out / "retweet_eval.json",
               {{"test", {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"n", m.n}}},
                {"train_distribution",
                 {{"pos_mean", d.pos_mean}, {"neg_mean", d.neg_mean}, {"pos_std", d.pos_std}, {"neg_std", d.neg_std},
                  {"pos_n", d.pos_n}, {"neg_n", d.neg_n}, {"welch_t", d.welch_t}, {"dof", d.dof}, {"p_value", d.p_value}}}});
    out << fmt::format("test accuracy {:.2f}, F1 {:.2f}; train score means {:.4f} (pos) vs {:.4f} (neg), p = {:.3g}\n",
                       m.accuracy, m.f1, d.pos_mean, d.neg_mean, d.p_value);
    return 0;
  }
  if (cmd == "score-users") {
    std::vector<std::string> users;
    for (const auto& [id, _] : corpus.users()) users.push_back(id);
    const auto scores = score_users(model, features, users, misinfo);
    save_scores_csv(scores, c.out / "scores.csv");
    out << fmt::format("scored {} users\n", scores.size());
    return 0;
  }
  if (cmd == "recover") {
    const auto truth = load_truth_users_csv(c.truth);
    const auto r = recovery_report(model, truth, features, misinfo, c.n_comparisons, c.seed);
    save_recovery_json(r, c.out / "recovery.json");
    out << fmt::format("spearman {:.4f}; agreement {:.2f}% (cosine baseline {:.2f}%)\n", r.spearman_overall,
                       r.pairwise_agreement_vs_teacher, r.baseline_agreement);
    return 0;
  }
  throw UsageError("unknown command " + cmd);
}

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"ingest", "validate a corpus and write corpus_summary.json"},
    {"embed-import", "convert embedding JSONL into an EMB1 table"},
    {"build-pairs", "construct labeled user-post pairs (pairs.jsonl)"},
    {"split", "assign train/val/test splits (pairs_split.jsonl)"},
    {"train", "fit the susceptibility model (model.json, history.csv)"},
    {"eval-retweet", "repost classification metrics and score separation"},
    {"eval-compare", "agreement of score-based comparisons with gold labels"},
    {"score-users", "overall susceptibility score per user (scores.csv)"},
    {"analyze-factors", "Pearson correlation of factors with scores"},
    {"analyze-community", "smoothed per-group scores (groups.csv)"},
    {"synth-gen", "generate a synthetic corpus with known latent scores"},
    {"recover", "compare a trained model with the synthetic teacher"},
    {"report", "print a CSV or JSON report as an aligned table"},
};

}  // namespace

int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Susceptibility modeling pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file");

  const auto all = settings();
  std::map<std::string, std::string> flags;
  for (const auto& s : all) {
    std::string name = s.key;
    std::replace(name.begin(), name.end(), '_', '-');
    app.add_option("--" + name, flags[s.key], s.help);
  }
  for (const auto& [name, help] : kCommands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    std::map<std::string, std::string> merged;
    if (!config_path.empty()) merged = read_config_file(config_path);
    std::map<std::string, const Setting*> by_key;
    for (const auto& s : all) by_key[s.key] = &s;
    for (const auto& [key, value] : merged) {
      if (!by_key.count(key)) throw UsageError("unknown config key '" + key + "'");
    }
    for (const auto& s : all) {
      std::string name = s.key;
      std::replace(name.begin(), name.end(), '_', '-');
      if (app.count("--" + name) > 0) merged[s.key] = flags[s.key];
    }
    for (const auto& [key, value] : merged) by_key.at(key)->apply(cfg, value);
    validate(cfg);
    check_required(cmd, cfg);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    return execute(cmd, cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

namespace {

bool parse_number(const std::string& s, double& value, bool& integral) {
  if (s.empty()) return false;
  try {
    std::size_t used = 0;
    value = std::stod(s, &used);
    if (used != s.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  integral = s.find_first_of(".eEnN") == std::string::npos;
  return true;
}

std::string render_cell(const std::string& raw, bool& numeric) {
  double v = 0.0;
  bool integral = false;
  numeric = parse_number(raw, v, integral);
  if (!numeric || integral) return raw;
  return fmt::format("{:.4f}", v);
}

}  // namespace

void print_report(const fs::path& path, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  if (path.extension() == ".json") {
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    rows.push_back({"key", "value"});
    std::function<void(const std::string&, const nlohmann::ordered_json&)> flatten = [&](const std::string& prefix,
                                                                                          const nlohmann::ordered_json& v) {
      if (v.is_object()) {
        for (const auto& [k, child] : v.items()) flatten(prefix.empty() ? k : prefix + "." + k, child);
      } else if (v.is_number_float()) {
        rows.push_back({prefix, format_double(v.get<double>())});
      } else {
        rows.push_back({prefix, v.is_string() ? v.get<std::string>() : v.dump()});
      }
    };
    flatten("", doc);
  } else {
    for (const auto& line : read_lines(path)) {
      if (!line.empty()) rows.push_back(split_csv_line(line));
    }
  }
  if (rows.size() <= 1) {
    out << "no rows\n";
    return;
  }

  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  std::vector<std::vector<std::string>> cells(rows.size(), std::vector<std::string>(cols));
  std::vector<std::vector<bool>> right(rows.size(), std::vector<bool>(cols, false));
  std::vector<std::size_t> width(cols, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::string raw = j < rows[i].size() ? rows[i][j] : "";
      bool numeric = false;
      cells[i][j] = i == 0 ? raw : render_cell(raw, numeric);
      right[i][j] = numeric;
      width[j] = std::max(width[j], cells[i][j].size());
    }
  }
  // Headers follow the alignment of their column body.
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 1; i < rows.size(); ++i) right[0][j] = right[0][j] || right[i][j];
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string line;
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) line += "  ";
      line += right[i][j] ? fmt::format("{:>{}}", cells[i][j], width[j]) : fmt::format("{:<{}}", cells[i][j], width[j]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (cols - 1), '-') << '\n';
    }
  }
}

}  // namespace suscept::cli
