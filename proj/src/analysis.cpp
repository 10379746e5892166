#include "suscept/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "suscept/error.hpp"
#include "suscept/io.hpp"

namespace suscept {

void FactorTable::add(FactorRow row) {
  if (!std::isfinite(row.value)) throw Error(ErrorCode::ParseError, "non-finite factor value for " + row.user_id);
  if (!keys_.emplace(row.user_id, row.factor, row.post_id).second) {
    throw Error(ErrorCode::ParseError, "duplicate factor row " + row.user_id + "/" + row.factor + "/" + row.post_id);
  }
  rows_.push_back(std::move(row));
}

std::set<std::string> FactorTable::factors() const {
  std::set<std::string> out;
  for (const auto& r : rows_) out.insert(r.factor);
  return out;
}

FactorTable load_factors_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  FactorTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv_line(lines[i]);
    const auto where = path.string() + ":" + std::to_string(i + 1) + ": ";
    if (f.size() != 4) throw Error(ErrorCode::ParseError, where + "expected user_id,post_id,factor,value");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument(f[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, where + "bad value '" + f[3] + "'");
    }
    try {
      table.add({f[0], f[2], f[1], v});
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, where + e.message());
    }
  }
  return table;
}

AggregationMode AggregationPolicy::mode_for(const std::string& factor) const {
  auto it = modes.find(factor);
  return it == modes.end() ? fallback : it->second;
}

std::map<std::string, double> aggregate_factor(const FactorTable& table, const AggregationPolicy& policy,
                                               const std::string& factor) {
  const auto mode = policy.mode_for(factor);
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : table.rows()) {
    if (r.factor != factor) continue;
    auto [it, fresh] = acc.try_emplace(r.user_id, r.value, 1);
    if (fresh) continue;
    if (mode == AggregationMode::Max) {
      it->second.first = std::max(it->second.first, r.value);
    } else {
      it->second.first += r.value;
    }
    ++it->second.second;
  }
  if (acc.empty()) throw Error(ErrorCode::UnknownFactor, "factor '" + factor + "' not in table");
  std::map<std::string, double> out;
  for (const auto& [user, v] : acc) {
    out[user] = mode == AggregationMode::Max ? v.first : v.first / static_cast<double>(v.second);
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::LengthMismatch, "pearson needs two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantInput, "pearson of a constant sample");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::LengthMismatch, "spearman needs two equal-length samples of size >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

std::vector<FactorCorrelation> factor_correlations(const FactorTable& table, const AggregationPolicy& policy,
                                                   const std::map<std::string, double>& user_scores) {
  std::vector<FactorCorrelation> out;
  for (const auto& factor : table.factors()) {
    const auto agg = aggregate_factor(table, policy, factor);
    std::vector<double> xs, ys;
    for (const auto& [user, v] : agg) {
      auto it = user_scores.find(user);
      if (it == user_scores.end()) continue;
      xs.push_back(v);
      ys.push_back(it->second);
    }
    double r = std::numeric_limits<double>::quiet_NaN();
    try {
      r = pearson(xs, ys);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstantInput && e.code() != ErrorCode::LengthMismatch) throw;
    }
    out.push_back({factor, r, xs.size()});
  }
  return out;
}

void save_correlations_csv(std::span<const FactorCorrelation> rows, const std::filesystem::path& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "factor,r,n\n";
    for (const auto& r : rows) out << csv_escape(r.factor) << ',' << format_double(r.r) << ',' << r.n << '\n';
  });
}

std::vector<GroupStat> community_scores(const std::map<std::string, double>& user_scores,
                                        const std::map<std::string, std::string>& grouping) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& [user, key] : grouping) {
    auto it = user_scores.find(user);
    if (it == user_scores.end()) continue;
    auto& slot = acc[key];
    slot.first += it->second;
    ++slot.second;
  }
  if (acc.empty()) throw Error(ErrorCode::EmptyInput, "no user has both a score and a group");
  std::vector<GroupStat> out;
  for (const auto& [key, v] : acc) out.push_back({key, v.second, v.first / static_cast<double>(v.second)});
  return out;
}

void SmoothingConfig::validate() const {
  if (!(prior_strength >= 0.0) || !std::isfinite(prior_strength)) {
    throw Error(ErrorCode::BadConfig, "prior strength must be non-negative");
  }
}

std::vector<GroupStat> bayes_smooth(std::span<const GroupStat> stats, const SmoothingConfig& cfg) {
  cfg.validate();
  std::vector<GroupStat> out;
  out.reserve(stats.size());
  for (const auto& g : stats) {
    const double n = static_cast<double>(g.n);
    double smoothed = cfg.prior_mean;
    if (cfg.prior_strength == 0.0 && g.n > 0) {
      smoothed = g.mean;
    } else if (g.n > 0) {
      // Weighted form keeps n == C an exact midpoint.
      smoothed = cfg.prior_mean + n / (n + cfg.prior_strength) * (g.mean - cfg.prior_mean);
    }
    out.push_back({g.key, g.n, smoothed});
  }
  return out;
}

SmoothingConfig prior_from_scores(const std::map<std::string, double>& user_scores, double prior_strength) {
  if (user_scores.empty()) throw Error(ErrorCode::EmptyInput, "no scores for the prior");
  double mean = 0.0;
  for (const auto& [_, s] : user_scores) mean += s;
  mean /= static_cast<double>(user_scores.size());
  double ss = 0.0;
  for (const auto& [_, s] : user_scores) ss += (s - mean) * (s - mean);
  return {mean, prior_strength, std::sqrt(ss / static_cast<double>(user_scores.size()))};
}

void export_group_table(std::span<const GroupStat> stats, double reference_mean, const std::filesystem::path& path) {
  if (stats.empty()) throw Error(ErrorCode::EmptyInput, "no groups to export");
  std::vector<GroupStat> sorted(stats.begin(), stats.end());
  std::sort(sorted.begin(), sorted.end(), [](const GroupStat& a, const GroupStat& b) { return a.key < b.key; });
  write_file_atomic(path, [&](std::ostream& out) {
    out << "key,score,n,above_reference\n";
    for (const auto& g : sorted) {
      out << csv_escape(g.key) << ',' << format_double(g.mean) << ',' << g.n << ',' << (g.mean > reference_mean ? 1 : 0)
          << '\n';
    }
  });
}

}  // namespace suscept
