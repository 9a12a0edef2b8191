#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bubblesim/catalog.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/recommenders.hpp"
#include "bubblesim/rng.hpp"
#include "bubblesim/strutil.hpp"

namespace bubblesim {

enum class Level { kLow = 0, kMid = 1, kHigh = 2 };

inline const char* to_string(Level level) {
  switch (level) {
    case Level::kLow: return "low";
    case Level::kMid: return "mid";
    case Level::kHigh: return "high";
  }
  return "?";
}

inline Level level_from(std::string_view name) {
  if (name == "low") return Level::kLow;
  if (name == "mid") return Level::kMid;
  if (name == "high") return Level::kHigh;
  throw ValidationError("unknown level '" + std::string(name) + "'");
}

// Scale applied to a policy's total pick budget per activity level.
inline double activity_factor(Level level) {
  switch (level) {
    case Level::kLow: return 0.5;
    case Level::kMid: return 1.0;
    case Level::kHigh: return 1.5;
  }
  return 1.0;
}

enum class PolicyKind { kPositive, kWeaklyPositive, kNegative, kWeaklyNegative, kCustom };

inline const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kPositive: return "positive";
    case PolicyKind::kWeaklyPositive: return "weakly_positive";
    case PolicyKind::kNegative: return "negative";
    case PolicyKind::kWeaklyNegative: return "weakly_negative";
    case PolicyKind::kCustom: return "custom";
  }
  return "?";
}

inline PolicyKind policy_kind_from(std::string_view name) {
  if (name == "positive") return PolicyKind::kPositive;
  if (name == "weakly_positive") return PolicyKind::kWeaklyPositive;
  if (name == "negative") return PolicyKind::kNegative;
  if (name == "weakly_negative") return PolicyKind::kWeaklyNegative;
  if (name == "custom") return PolicyKind::kCustom;
  throw ValidationError("unknown policy kind '" + std::string(name) + "'");
}

inline bool is_positive_family(PolicyKind kind) {
  return kind == PolicyKind::kPositive || kind == PolicyKind::kWeaklyPositive;
}

inline bool is_negative_family(PolicyKind kind) {
  return kind == PolicyKind::kNegative || kind == PolicyKind::kWeaklyNegative;
}

// The positive family picks n_match taste-matching plus n_explore random
// non-matching items. The negative family picks the first n_top ranks plus
// n_match taste-matching items from the rest. Weak variants shrink the
// family's defining quota by one.
struct BehaviorPolicy {
  PolicyKind kind = PolicyKind::kCustom;
  int n_match = 0;
  int n_explore = 0;
  int n_top = 0;
  double taste_threshold = 0.05;
  // Rating blend weight on the item's mean rating, indexed by conformity level.
  std::array<double, 3> conformity_alpha{0.2, 0.5, 0.8};

  static BehaviorPolicy make(PolicyKind kind) {
    BehaviorPolicy p;
    p.kind = kind;
    switch (kind) {
      case PolicyKind::kPositive:
        p.n_match = 4;
        p.n_explore = 2;
        break;
      case PolicyKind::kWeaklyPositive:
        p.n_match = 4;
        p.n_explore = 1;
        break;
      case PolicyKind::kNegative:
        p.n_top = 2;
        p.n_match = 3;
        break;
      case PolicyKind::kWeaklyNegative:
        p.n_top = 1;
        p.n_match = 3;
        break;
      case PolicyKind::kCustom:
        break;
    }
    return p;
  }

  int base_total() const { return is_negative_family(kind) ? n_top + n_match : n_match + n_explore; }
};

struct UserProfile {
  UserId user = 0;
  std::map<CategoryId, double> taste_weights;  // normalized over cold-start history
  Level activity = Level::kMid;
  Level conformity = Level::kMid;
  Level diversity = Level::kMid;
};

// Mean observed rating per item; items never rated report the scale midpoint.
class ItemMeanTable {
 public:
  ItemMeanTable() = default;

  static ItemMeanTable from_log(const InteractionLog& log, std::size_t num_items) {
    ItemMeanTable t;
    t.sums_.assign(num_items, 0.0);
    t.counts_.assign(num_items, 0);
    for (const LogEntry& e : log.entries()) {
      t.sums_[static_cast<std::size_t>(e.item)] += e.rating;
      t.counts_[static_cast<std::size_t>(e.item)] += 1;
    }
    return t;
  }

  double mean(ItemIndex item) const {
    auto i = static_cast<std::size_t>(item);
    if (i >= counts_.size() || counts_[i] == 0) return 3.0;
    return sums_[i] / static_cast<double>(counts_[i]);
  }

 private:
  std::vector<double> sums_;
  std::vector<int> counts_;
};

// Rank-based tercile levels plus the item mean table the conformity metric
// and the rating rule share.
struct PopulationStats {
  ItemMeanTable item_means;
  std::map<UserId, Level> activity_level;
  std::map<UserId, Level> diversity_level;
  std::map<UserId, Level> conformity_level;
};

namespace detail {

// Ascending metric ranks split into terciles: rank r of N maps to level
// r*3/N. Ties are ordered by user id so the split never depends on map
// iteration or sort internals.
inline void assign_terciles(const std::vector<std::pair<double, UserId>>& metric_user,
                            std::map<UserId, Level>& out) {
  std::vector<std::pair<double, UserId>> sorted = metric_user;
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = sorted.size();
  for (std::size_t r = 0; r < n; ++r) {
    out[sorted[r].second] = static_cast<Level>(r * 3 / n);
  }
}

}  // namespace detail

// `histories` holds the cold-start interactions of every pool user (keyed by
// user). Item means use the whole pool; tercile levels are computed over
// `population`, the users that will actually be profiled.
inline PopulationStats compute_population_stats(const std::map<UserId, std::vector<RawInteraction>>& histories,
                                                const std::vector<UserId>& population, const Catalog& catalog) {
  PopulationStats stats;
  {
    InteractionLog pool_log;
    for (const auto& [user, history] : histories) {
      for (const RawInteraction& r : history) pool_log.append(user, catalog.require_index(r.item), r.rating, 0);
    }
    stats.item_means = ItemMeanTable::from_log(pool_log, catalog.num_items());
  }

  std::vector<std::pair<double, UserId>> activity, diversity, conformity;
  for (UserId user : population) {
    auto it = histories.find(user);
    if (it == histories.end()) throw ValidationError("no cold-start history for user " + std::to_string(user));
    const auto& history = it->second;
    activity.emplace_back(static_cast<double>(history.size()), user);

    std::set<CategoryId> cats;
    double deviation_sum = 0.0;
    for (const RawInteraction& r : history) {
      ItemIndex idx = catalog.require_index(r.item);
      cats.insert(catalog.primary_category(idx));
      deviation_sum += std::abs(r.rating - stats.item_means.mean(idx));
    }
    diversity.emplace_back(static_cast<double>(cats.size()), user);
    double mean_dev = history.empty() ? 0.0 : deviation_sum / static_cast<double>(history.size());
    // Small deviation from the crowd's mean rating = high conformity.
    conformity.emplace_back(-mean_dev, user);
  }
  detail::assign_terciles(activity, stats.activity_level);
  detail::assign_terciles(diversity, stats.diversity_level);
  detail::assign_terciles(conformity, stats.conformity_level);
  return stats;
}

inline UserProfile derive_profile(UserId user, const std::vector<RawInteraction>& history, const Catalog& catalog,
                                  const PopulationStats& stats) {
  UserProfile p;
  p.user = user;
  std::map<CategoryId, double> counts;
  for (const RawInteraction& r : history) counts[catalog.primary_category(catalog.require_index(r.item))] += 1.0;
  if (!history.empty()) {
    double total = static_cast<double>(history.size());
    for (auto& [cat, count] : counts) p.taste_weights[cat] = count / total;
  }
  auto level_of = [&](const std::map<UserId, Level>& levels, const char* what) {
    auto it = levels.find(user);
    if (it == levels.end()) throw ValidationError(std::string("no ") + what + " level for user " + std::to_string(user));
    return it->second;
  };
  p.activity = level_of(stats.activity_level, "activity");
  p.diversity = level_of(stats.diversity_level, "diversity");
  p.conformity = level_of(stats.conformity_level, "conformity");
  return p;
}

// Positive personas run at the highest activity and diversity, negative ones
// at the lowest; conformity always keeps its derived level.
inline UserProfile apply_trait_overrides(UserProfile profile, PolicyKind kind) {
  if (is_positive_family(kind)) {
    profile.activity = Level::kHigh;
    profile.diversity = Level::kHigh;
  } else if (is_negative_family(kind)) {
    profile.activity = Level::kLow;
    profile.diversity = Level::kLow;
  }
  return profile;
}

struct AgentDecision {
  enum class Provenance { kRuleBased, kLlm, kLlmFallback };

  UserId user = 0;
  int round = 0;
  std::vector<std::pair<ItemIndex, double>> chosen;  // pick order, ratings in [1, 5]
  Provenance provenance = Provenance::kRuleBased;
};

namespace detail {

inline double taste_weight(const UserProfile& profile, const Catalog& catalog, ItemIndex item) {
  auto it = profile.taste_weights.find(catalog.primary_category(item));
  return it == profile.taste_weights.end() ? 0.0 : it->second;
}

inline double rate_item(const UserProfile& profile, const BehaviorPolicy& policy, const Catalog& catalog,
                        const ItemMeanTable& means, ItemIndex item) {
  double max_w = 0.0;
  for (const auto& [cat, w] : profile.taste_weights) max_w = std::max(max_w, w);
  double affinity = max_w > 0.0 ? taste_weight(profile, catalog, item) / max_w : 0.0;
  double alpha = policy.conformity_alpha[static_cast<std::size_t>(profile.conformity)];
  double blended = alpha * means.mean(item) + (1.0 - alpha) * (1.0 + 4.0 * affinity);
  double r = static_cast<double>(round_half_up(blended));
  return std::clamp(r, 1.0, 5.0);
}

}  // namespace detail

// Deterministic stand-in for the LLM persona. Pick counts scale with the
// activity level; the family's defining quota (exploration for positive,
// top-rank conformity for negative) is filled first when the budget shrinks.
inline AgentDecision decide_rule_based(const UserProfile& profile, const BehaviorPolicy& policy,
                                       const RankedPage& page, const Catalog& catalog, const ItemMeanTable& means,
                                       std::uint64_t seed) {
  AgentDecision d;
  d.user = page.user;
  d.round = page.round;
  d.provenance = AgentDecision::Provenance::kRuleBased;
  if (page.items.empty()) return d;

  double scale = activity_factor(profile.activity);
  int total = static_cast<int>(std::max<long long>(1, round_half_up(scale * policy.base_total())));

  std::vector<std::size_t> picks;  // positions within the page
  Rng rng(seed);
  if (is_negative_family(policy.kind)) {
    int top_quota = std::min<int>({policy.n_top, total, static_cast<int>(page.items.size())});
    for (int i = 0; i < top_quota; ++i) picks.push_back(static_cast<std::size_t>(i));
    int taste_quota = total - top_quota;
    std::vector<std::size_t> rest;
    for (std::size_t i = static_cast<std::size_t>(top_quota); i < page.items.size(); ++i) rest.push_back(i);
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      return detail::taste_weight(profile, catalog, page.items[a]) >
             detail::taste_weight(profile, catalog, page.items[b]);
    });
    for (std::size_t i = 0; i < rest.size() && static_cast<int>(i) < taste_quota; ++i) picks.push_back(rest[i]);
  } else {
    int explore_quota = std::min(policy.n_explore, total);
    int match_quota = total - explore_quota;
    std::vector<std::size_t> matching, other;
    for (std::size_t i = 0; i < page.items.size(); ++i) {
      if (detail::taste_weight(profile, catalog, page.items[i]) >= policy.taste_threshold) {
        matching.push_back(i);
      } else {
        other.push_back(i);
      }
    }
    for (std::size_t i = 0; i < matching.size() && static_cast<int>(i) < match_quota; ++i) picks.push_back(matching[i]);
    std::vector<std::size_t> explored = rng.sample(std::move(other), static_cast<std::size_t>(explore_quota));
    for (std::size_t pos : explored) picks.push_back(pos);
  }

  if (picks.empty()) picks.push_back(0);  // a shown page always yields at least one pick
  for (std::size_t pos : picks) {
    ItemIndex item = page.items[pos];
    d.chosen.emplace_back(item, detail::rate_item(profile, policy, catalog, means, item));
  }
  return d;
}

}  // namespace bubblesim
