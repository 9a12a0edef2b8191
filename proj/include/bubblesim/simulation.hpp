#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bubblesim/agents.hpp"
#include "bubblesim/catalog.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/recommenders.hpp"
#include "bubblesim/rng.hpp"

namespace bubblesim {

struct SimulationConfig {
  int rounds = 8;
  int page_size = 20;
  int frequent_pool = 1000;  // cold start draws from the most active users
  int sample_size = 200;     // cohort size sampled from that pool
  double randomize_fraction = 0.0;
  std::uint64_t master_seed = 42;
  RecommenderSpec recommender;
  BehaviorPolicy positive_policy = BehaviorPolicy::make(PolicyKind::kPositive);
  BehaviorPolicy negative_policy = BehaviorPolicy::make(PolicyKind::kNegative);

  void validate() const {
    if (rounds < 1) throw ValidationError("rounds must be >= 1");
    if (page_size < 1) throw ValidationError("page_size must be >= 1");
    if (frequent_pool < 1) throw ValidationError("frequent_pool must be >= 1");
    if (sample_size < 1) throw ValidationError("sample_size must be >= 1");
    if (sample_size > frequent_pool) throw ValidationError("sample_size cannot exceed frequent_pool");
    if (randomize_fraction < 0.0 || randomize_fraction > 1.0) {
      throw ValidationError("randomize_fraction must be in [0, 1]");
    }
  }
};

// Cold-start state shared verbatim by both arms of a contrastive run.
struct ColdStart {
  InteractionLog log;  // every pool interaction, tagged round 0
  std::vector<UserId> cohort;
  std::map<UserId, std::vector<RawInteraction>> pool_histories;
};

// Picks the `frequent_pool` most active users (ties to the smaller id), logs
// their full history as round 0, and samples the simulated cohort from the
// pool uniformly.
inline ColdStart build_cold_start(const std::vector<RawInteraction>& raw, const Catalog& catalog, int frequent_pool,
                                  int sample_size, std::uint64_t seed) {
  if (sample_size < 1 || frequent_pool < sample_size) {
    throw ValidationError("cold start needs 1 <= sample_size <= frequent_pool");
  }
  std::map<UserId, std::vector<RawInteraction>> by_user;
  for (const RawInteraction& r : raw) by_user[r.user].push_back(r);
  if (by_user.size() < static_cast<std::size_t>(frequent_pool)) {
    throw ValidationError("dataset has " + std::to_string(by_user.size()) + " users, cold start needs " +
                          std::to_string(frequent_pool));
  }

  std::vector<std::pair<std::size_t, UserId>> activity;
  activity.reserve(by_user.size());
  for (const auto& [user, history] : by_user) activity.emplace_back(history.size(), user);
  std::sort(activity.begin(), activity.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  activity.resize(static_cast<std::size_t>(frequent_pool));

  ColdStart cold;
  std::vector<UserId> pool;
  pool.reserve(activity.size());
  for (const auto& [count, user] : activity) pool.push_back(user);
  std::sort(pool.begin(), pool.end());
  for (UserId user : pool) {
    auto& history = by_user.at(user);
    for (const RawInteraction& r : history) cold.log.append(user, catalog.require_index(r.item), r.rating, 0);
    cold.pool_histories.emplace(user, std::move(history));
  }

  Rng rng(seed);
  cold.cohort = rng.sample(std::move(pool), static_cast<std::size_t>(sample_size));
  std::sort(cold.cohort.begin(), cold.cohort.end());
  return cold;
}

// Decision source for one simulated user-round. The default implementation
// is the deterministic rule-based persona; the LLM bridge provides another.
class DecisionMaker {
 public:
  virtual ~DecisionMaker() = default;

  // Called when a run switches arms, for sinks that label their output.
  virtual void begin_arm(const std::string& arm) { (void)arm; }

  virtual AgentDecision decide(const UserProfile& profile, const BehaviorPolicy& policy, const RankedPage& page,
                               const Catalog& catalog, const ItemMeanTable& means, std::uint64_t seed) = 0;
};

class RuleBasedDecisionMaker final : public DecisionMaker {
 public:
  AgentDecision decide(const UserProfile& profile, const BehaviorPolicy& policy, const RankedPage& page,
                       const Catalog& catalog, const ItemMeanTable& means, std::uint64_t seed) override {
    return decide_rule_based(profile, policy, page, catalog, means, seed);
  }
};

struct RoundRecord {
  int round = 0;
  std::vector<RankedPage> pages;        // cohort order
  std::vector<AgentDecision> decisions;  // cohort order
};

struct RunRecord {
  std::string arm;
  PolicyKind policy_kind = PolicyKind::kCustom;
  std::vector<UserId> cohort;
  std::vector<RoundRecord> rounds;
  InteractionLog final_log;
  long long dropped_merges = 0;
  long long replacement_shortfall = 0;
};

// One round: retrain on everything merged so far, build each cohort user's
// page against their own exclusions, collect every decision, then merge.
// Pages and decisions all observe the pre-round log, so per-user work is
// order-independent within the round.
inline RoundRecord run_round(int round, InteractionLog& log, const std::vector<UserId>& cohort,
                             const std::map<UserId, UserProfile>& profiles, const BehaviorPolicy& policy,
                             const SimulationConfig& cfg, const Catalog& catalog, DecisionMaker& decider,
                             RunRecord& record) {
  RecommenderSpec spec = cfg.recommender;
  spec.seed = mix_seed({cfg.master_seed, static_cast<std::uint64_t>(round), kSeedFit});
  std::unique_ptr<FittedModel> model = fit(spec, log, catalog);
  ItemMeanTable means = ItemMeanTable::from_log(log, catalog.num_items());

  RoundRecord rec;
  rec.round = round;
  rec.pages.reserve(cohort.size());
  rec.decisions.reserve(cohort.size());
  for (UserId user : cohort) {
    ItemMask mask = log.interacted_mask(user, catalog.num_items());
    RankedPage page;
    try {
      page = model->recommend(user, cfg.page_size, mask);
    } catch (const CatalogExhausted& e) {
      throw CatalogExhausted(std::string(e.what()) + " in round " + std::to_string(round));
    }
    page.round = round;
    if (cfg.randomize_fraction > 0.0) {
      std::uint64_t rseed = mix_seed({cfg.master_seed, static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(user), kSeedRandomize});
      page = randomize_page(page, cfg.randomize_fraction, catalog, mask, rseed);
      record.replacement_shortfall += page.replacement_shortfall;
    }
    std::uint64_t dseed = mix_seed({cfg.master_seed, static_cast<std::uint64_t>(round),
                                    static_cast<std::uint64_t>(user), kSeedDecide});
    AgentDecision decision = decider.decide(profiles.at(user), policy, page, catalog, means, dseed);
    rec.pages.push_back(std::move(page));
    rec.decisions.push_back(std::move(decision));
  }
  for (const AgentDecision& d : rec.decisions) {
    for (const auto& [item, rating] : d.chosen) {
      if (!log.append(d.user, item, rating, round)) ++record.dropped_merges;
    }
  }
  return rec;
}

// Runs one arm from the shared cold-start state. Trait overrides follow the
// policy kind, so two arms assigned the same policy produce identical runs.
inline RunRecord run_simulation(const std::string& arm, const BehaviorPolicy& policy, const SimulationConfig& cfg,
                                const Catalog& catalog, const ColdStart& cold,
                                const std::map<UserId, UserProfile>& base_profiles, DecisionMaker* decider) {
  cfg.validate();
  RuleBasedDecisionMaker fallback;
  DecisionMaker& dm = decider ? *decider : static_cast<DecisionMaker&>(fallback);
  dm.begin_arm(arm);

  std::map<UserId, UserProfile> profiles;
  for (const auto& [user, profile] : base_profiles) profiles.emplace(user, apply_trait_overrides(profile, policy.kind));

  RunRecord record;
  record.arm = arm;
  record.policy_kind = policy.kind;
  record.cohort = cold.cohort;
  record.final_log = cold.log;
  for (int t = 1; t <= cfg.rounds; ++t) {
    record.rounds.push_back(
        run_round(t, record.final_log, cold.cohort, profiles, policy, cfg, catalog, dm, record));
  }
  return record;
}

struct ContrastPair {
  RunRecord positive;
  RunRecord negative;
  std::vector<UserId> cohort;
  std::map<UserId, UserProfile> base_profiles;
};

inline std::map<UserId, UserProfile> derive_cohort_profiles(const ColdStart& cold, const Catalog& catalog) {
  PopulationStats stats = compute_population_stats(cold.pool_histories, cold.cohort, catalog);
  std::map<UserId, UserProfile> profiles;
  for (UserId user : cold.cohort) {
    profiles.emplace(user, derive_profile(user, cold.pool_histories.at(user), catalog, stats));
  }
  return profiles;
}

// Paired run: both arms restart from the same cold-start log, cohort, and
// per-round seeds; only the behavior policy (and its trait overrides)
// differs. Assigning the same policy to both arms therefore reproduces the
// positive arm bit for bit.
inline ContrastPair run_contrastive(const SimulationConfig& cfg, const Catalog& catalog,
                                    const std::vector<RawInteraction>& raw, DecisionMaker* decider = nullptr) {
  cfg.validate();
  ColdStart cold = build_cold_start(raw, catalog, cfg.frequent_pool, cfg.sample_size,
                                    mix_seed({cfg.master_seed, kSeedCohort}));
  ContrastPair pair;
  pair.cohort = cold.cohort;
  pair.base_profiles = derive_cohort_profiles(cold, catalog);
  pair.positive = run_simulation("positive", cfg.positive_policy, cfg, catalog, cold, pair.base_profiles, decider);
  pair.negative = run_simulation("negative", cfg.negative_policy, cfg, catalog, cold, pair.base_profiles, decider);
  return pair;
}

}  // namespace bubblesim
