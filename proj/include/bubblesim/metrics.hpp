#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bubblesim/catalog.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/simulation.hpp"

namespace bubblesim {

// Number of distinct primary categories on the page.
inline int page_diversity(const RankedPage& page, const Catalog& catalog) {
  std::set<CategoryId> cats;
  for (ItemIndex i : page.items) cats.insert(catalog.primary_category(i));
  return static_cast<int>(cats.size());
}

// Shannon entropy of the page's primary-category distribution, divided by
// ln(min(M, page size)). The normalizer is 1 when that minimum is 1, so a
// single-item page (or single-category catalog) scores 0.
inline double standardized_entropy(const RankedPage& page, const Catalog& catalog) {
  if (page.items.empty()) return 0.0;
  std::map<CategoryId, int> counts;
  for (ItemIndex i : page.items) counts[catalog.primary_category(i)] += 1;
  double n = static_cast<double>(page.items.size());
  double h = 0.0;
  for (const auto& [cat, count] : counts) {
    double f = static_cast<double>(count) / n;
    h -= f * std::log(f);
  }
  std::size_t cap = std::min(catalog.num_categories(), page.items.size());
  if (cap <= 1) return h;  // h is 0 here; normalizer is defined as 1
  return h / std::log(static_cast<double>(cap));
}

// Fraction of all catalog categories present on the page.
inline double category_coverage(const RankedPage& page, const Catalog& catalog) {
  if (catalog.num_categories() == 0) return 0.0;
  return static_cast<double>(page_diversity(page, catalog)) / static_cast<double>(catalog.num_categories());
}

// Share of page items belonging to the page's most frequent category.
inline double top_category_share(const RankedPage& page, const Catalog& catalog) {
  if (page.items.empty()) return 0.0;
  std::map<CategoryId, int> counts;
  for (ItemIndex i : page.items) counts[catalog.primary_category(i)] += 1;
  int top = 0;
  for (const auto& [cat, count] : counts) top = std::max(top, count);
  return static_cast<double>(top) / static_cast<double>(page.items.size());
}

struct BepSeries {
  double overall = 0.0;
  std::vector<double> per_round;  // sum(positive diversities) / sum(negative diversities)
};

// Core contrastive ratio on plain per-round diversity vectors. Kept separate
// from the simulation types so hand-built series can exercise it directly.
inline BepSeries bep_from_series(const std::vector<std::vector<double>>& positive,
                                 const std::vector<std::vector<double>>& negative) {
  if (positive.size() != negative.size()) throw ValidationError("arm series differ in round count");
  if (positive.empty()) throw ValidationError("need at least one round to compute a contrast ratio");
  BepSeries out;
  out.per_round.reserve(positive.size());
  double total = 0.0;
  for (std::size_t t = 0; t < positive.size(); ++t) {
    if (positive[t].size() != negative[t].size()) {
      throw ValidationError("arm series differ in user count at round " + std::to_string(t + 1));
    }
    if (positive[t].empty()) throw ValidationError("empty round " + std::to_string(t + 1));
    double num = 0.0, den = 0.0;
    for (double v : positive[t]) num += v;
    for (double v : negative[t]) den += v;
    if (den <= 0.0) throw ValidationError("non-positive diversity sum in round " + std::to_string(t + 1));
    double ratio = num / den;
    out.per_round.push_back(ratio);
    total += ratio;
  }
  out.overall = total / static_cast<double>(out.per_round.size());
  return out;
}

// Per-round, per-user page diversities for one arm, as doubles.
inline std::vector<std::vector<double>> diversity_series(const RunRecord& run, const Catalog& catalog) {
  std::vector<std::vector<double>> series;
  series.reserve(run.rounds.size());
  for (const RoundRecord& round : run.rounds) {
    std::vector<double> row;
    row.reserve(round.pages.size());
    for (const RankedPage& page : round.pages) row.push_back(static_cast<double>(page_diversity(page, catalog)));
    series.push_back(std::move(row));
  }
  return series;
}

struct GroupStat {
  int users = 0;
  double mean_bep = 0.0;
};

struct BepReport {
  double overall = 0.0;
  std::vector<double> per_round;
  std::map<UserId, double> per_user;  // mean over rounds of the user's own ratio
  // grouping name ("activity", "conformity", "diversity", "genre") ->
  // level name -> aggregate over that level's members
  std::map<std::string, std::map<std::string, GroupStat>> groups;
};

// A user's dominant cold-start category; ties go to the lexicographically
// first category name. Users with no history fall into "(none)".
inline std::string dominant_category(const UserProfile& profile, const Catalog& catalog) {
  std::string best;
  double best_w = -1.0;
  for (const auto& [cat, w] : profile.taste_weights) {
    const std::string& name = catalog.category_name(cat);
    if (w > best_w || (w == best_w && name < best)) {
      best = name;
      best_w = w;
    }
  }
  return best.empty() ? "(none)" : best;
}

namespace detail {

inline void accumulate_group(std::map<std::string, std::pair<int, double>>& acc, const std::string& level,
                             double value) {
  auto& slot = acc[level];
  slot.first += 1;
  slot.second += value;
}

inline std::map<std::string, GroupStat> finalize_groups(const std::map<std::string, std::pair<int, double>>& acc) {
  std::map<std::string, GroupStat> out;
  for (const auto& [level, pair] : acc) {
    out[level] = GroupStat{pair.first, pair.second / static_cast<double>(pair.first)};
  }
  return out;
}

}  // namespace detail

inline std::map<std::string, std::map<std::string, GroupStat>> group_bep(
    const std::map<UserId, double>& per_user, const std::map<UserId, UserProfile>& profiles,
    const Catalog& catalog) {
  std::map<std::string, std::pair<int, double>> activity, conformity, diversity, genre;
  for (const auto& [user, value] : per_user) {
    auto it = profiles.find(user);
    if (it == profiles.end()) throw ValidationError("no profile for user " + std::to_string(user));
    const UserProfile& p = it->second;
    detail::accumulate_group(activity, to_string(p.activity), value);
    detail::accumulate_group(conformity, to_string(p.conformity), value);
    detail::accumulate_group(diversity, to_string(p.diversity), value);
    detail::accumulate_group(genre, dominant_category(p, catalog), value);
  }
  std::map<std::string, std::map<std::string, GroupStat>> out;
  out["activity"] = detail::finalize_groups(activity);
  out["conformity"] = detail::finalize_groups(conformity);
  out["diversity"] = detail::finalize_groups(diversity);
  out["genre"] = detail::finalize_groups(genre);
  return out;
}

// Full contrastive report for a paired run: overall and per-round ratios of
// summed page diversities, a per-user mean ratio, and group breakdowns over
// the cohort's base profiles.
inline BepReport bep(const ContrastPair& pair, const Catalog& catalog) {
  auto pos = diversity_series(pair.positive, catalog);
  auto neg = diversity_series(pair.negative, catalog);
  BepReport report;
  BepSeries series = bep_from_series(pos, neg);
  report.overall = series.overall;
  report.per_round = std::move(series.per_round);

  std::size_t rounds = pos.size();
  for (std::size_t u = 0; u < pair.cohort.size(); ++u) {
    double sum = 0.0;
    for (std::size_t t = 0; t < rounds; ++t) {
      if (neg[t][u] <= 0.0) throw ValidationError("non-positive page diversity");
      sum += pos[t][u] / neg[t][u];
    }
    report.per_user[pair.cohort[u]] = sum / static_cast<double>(rounds);
  }
  report.groups = group_bep(report.per_user, pair.base_profiles, catalog);
  return report;
}

struct TrendPoint {
  int round = 0;
  std::string arm;
  double mean_diversity = 0.0;
};

// Mean page diversity per round for each arm; positive rows come first,
// rounds ascending within an arm.
inline std::vector<TrendPoint> diversity_trend(const ContrastPair& pair, const Catalog& catalog) {
  std::vector<TrendPoint> out;
  for (const RunRecord* run : {&pair.positive, &pair.negative}) {
    for (const RoundRecord& round : run->rounds) {
      double sum = 0.0;
      for (const RankedPage& page : round.pages) sum += page_diversity(page, catalog);
      out.push_back(TrendPoint{round.round, run->arm,
                               round.pages.empty() ? 0.0 : sum / static_cast<double>(round.pages.size())});
    }
  }
  return out;
}

// Discrete KL divergence KL(p||q) over shared support. Inputs are count
// histograms; both sides get add-one smoothing so empty bins stay defined.
inline double kl_divergence(const std::vector<long long>& p_counts, const std::vector<long long>& q_counts) {
  if (p_counts.size() != q_counts.size()) throw ValidationError("histogram size mismatch");
  if (p_counts.empty()) throw ValidationError("empty histograms");
  double p_total = 0.0, q_total = 0.0;
  for (long long c : p_counts) p_total += static_cast<double>(c) + 1.0;
  for (long long c : q_counts) q_total += static_cast<double>(c) + 1.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < p_counts.size(); ++i) {
    double p = (static_cast<double>(p_counts[i]) + 1.0) / p_total;
    double q = (static_cast<double>(q_counts[i]) + 1.0) / q_total;
    kl += p * std::log(p / q);
  }
  return kl;
}

}  // namespace bubblesim
