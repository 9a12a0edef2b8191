#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "bubblesim/catalog.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/recommenders.hpp"
#include "bubblesim/rng.hpp"

namespace bubblesim {

struct AccuracyReport {
  std::map<int, double> hr;    // cutoff -> hit rate
  std::map<int, double> ndcg;  // cutoff -> mean 1/log2(rank+1) when rank <= cutoff
  double map = 0.0;            // mean reciprocal rank of the single held-out item
  long long excluded_users = 0;
  std::map<UserId, int> ranks;  // 1-based full-ranking position of the held-out item
};

namespace detail {

struct LeaveOneOutSplit {
  InteractionLog train;                    // round 0
  std::map<UserId, ItemIndex> held_out;    // timestamp-latest item per evaluated user
  long long excluded_users = 0;            // users with a single interaction
};

inline LeaveOneOutSplit leave_one_out(const std::vector<RawInteraction>& raw, const Catalog& catalog) {
  std::map<UserId, std::vector<RawInteraction>> by_user;
  for (const RawInteraction& r : raw) by_user[r.user].push_back(r);
  LeaveOneOutSplit split;
  for (const auto& [user, history] : by_user) {
    if (history.size() < 2) {
      ++split.excluded_users;
      for (const RawInteraction& r : history) split.train.append(user, catalog.require_index(r.item), r.rating, 0);
      continue;
    }
    // Canonical interaction order sorts by (timestamp, item), so the last
    // element is the latest interaction with a deterministic tie-break.
    const RawInteraction& last = history.back();
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
      const RawInteraction& r = history[i];
      split.train.append(user, catalog.require_index(r.item), r.rating, 0);
    }
    split.held_out.emplace(user, catalog.require_index(last.item));
  }
  return split;
}

// 1-based rank of `target` among all items not interacted with in training,
// under (score desc, item asc) ordering.
inline int rank_of(const std::vector<double>& scores, const ItemMask& train_mask, ItemIndex target) {
  double target_score = scores[static_cast<std::size_t>(target)];
  int rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<ItemIndex>(i) == target) continue;
    if (i < train_mask.size() && train_mask[i]) continue;
    double s = scores[i];
    if (s > target_score || (s == target_score && static_cast<ItemIndex>(i) < target)) ++rank;
  }
  return rank;
}

}  // namespace detail

// Leave-one-out protocol: hold out each user's latest interaction, fit one
// model on everything else, and rank the held-out item against all items the
// user has not interacted with in training. Users with fewer than two
// interactions are excluded (and counted).
inline AccuracyReport evaluate_accuracy(const RecommenderSpec& spec, const std::vector<RawInteraction>& raw,
                                        const Catalog& catalog, const std::vector<int>& k_values) {
  if (k_values.empty()) throw ValidationError("need at least one cutoff");
  for (int k : k_values) {
    if (k < 1) throw ValidationError("cutoffs must be >= 1");
  }
  detail::LeaveOneOutSplit split = detail::leave_one_out(raw, catalog);
  if (split.held_out.empty()) throw ValidationError("no user has two or more interactions");

  AccuracyReport report;
  report.excluded_users = split.excluded_users;
  std::unique_ptr<FittedModel> model = fit(spec, split.train, catalog);
  std::map<int, double> hit_sum, ndcg_sum;
  double rr_sum = 0.0;
  for (const auto& [user, target] : split.held_out) {
    std::vector<double> scores = model->scores_for(user);
    ItemMask mask = split.train.interacted_mask(user, catalog.num_items());
    int rank = detail::rank_of(scores, mask, target);
    report.ranks[user] = rank;
    rr_sum += 1.0 / static_cast<double>(rank);
    for (int k : k_values) {
      if (rank <= k) {
        hit_sum[k] += 1.0;
        ndcg_sum[k] += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
      }
    }
  }
  double n = static_cast<double>(split.held_out.size());
  for (int k : k_values) {
    report.hr[k] = hit_sum[k] / n;
    report.ndcg[k] = ndcg_sum[k] / n;
  }
  report.map = rr_sum / n;
  return report;
}

struct WrappedAccuracy {
  double hr = 0.0;
  double ndcg = 0.0;
};

// Accuracy of the page actually shown when the randomization wrapper is
// active: a top-k page is built per user, wrapped at `fraction`, and the
// held-out item is scored by its position on the final page. At fraction 0
// this coincides with the plain top-k metrics.
inline WrappedAccuracy evaluate_wrapped_accuracy(const RecommenderSpec& spec, const std::vector<RawInteraction>& raw,
                                                 const Catalog& catalog, int k, double fraction,
                                                 std::uint64_t seed) {
  if (k < 1) throw ValidationError("cutoff must be >= 1");
  detail::LeaveOneOutSplit split = detail::leave_one_out(raw, catalog);
  if (split.held_out.empty()) throw ValidationError("no user has two or more interactions");
  std::unique_ptr<FittedModel> model = fit(spec, split.train, catalog);

  WrappedAccuracy acc;
  double n = static_cast<double>(split.held_out.size());
  for (const auto& [user, target] : split.held_out) {
    ItemMask mask = split.train.interacted_mask(user, catalog.num_items());
    RankedPage page = model->recommend(user, k, mask);
    if (fraction > 0.0) {
      page = randomize_page(page, fraction, catalog, mask,
                            mix_seed({seed, static_cast<std::uint64_t>(user), kSeedEval}));
    }
    for (std::size_t pos = 0; pos < page.items.size(); ++pos) {
      if (page.items[pos] == target) {
        acc.hr += 1.0;
        acc.ndcg += 1.0 / std::log2(static_cast<double>(pos + 1) + 1.0);
        break;
      }
    }
  }
  acc.hr /= n;
  acc.ndcg /= n;
  return acc;
}

}  // namespace bubblesim
