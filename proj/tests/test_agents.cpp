#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bubblesim/agents.hpp"
#include "support/synth.hpp"

using namespace bubblesim;

namespace {

RankedPage page_of(const std::vector<ItemIndex>& items) {
  RankedPage p;
  p.user = 1;
  p.round = 1;
  p.items = items;
  p.scores.resize(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) p.scores[i] = static_cast<double>(items.size() - i);
  return p;
}

std::vector<ItemIndex> picked_items(const AgentDecision& d) {
  std::vector<ItemIndex> out;
  for (const auto& [item, rating] : d.chosen) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("policy defaults and budgets") {
  auto pos = BehaviorPolicy::make(PolicyKind::kPositive);
  REQUIRE(pos.n_match == 4);
  REQUIRE(pos.n_explore == 2);
  REQUIRE(pos.base_total() == 6);

  auto wpos = BehaviorPolicy::make(PolicyKind::kWeaklyPositive);
  REQUIRE(wpos.n_explore == 1);
  REQUIRE(wpos.base_total() == 5);

  auto neg = BehaviorPolicy::make(PolicyKind::kNegative);
  REQUIRE(neg.n_top == 2);
  REQUIRE(neg.n_match == 3);
  REQUIRE(neg.base_total() == 5);

  auto wneg = BehaviorPolicy::make(PolicyKind::kWeaklyNegative);
  REQUIRE(wneg.n_top == 1);
  REQUIRE(wneg.base_total() == 4);

  REQUIRE(pos.taste_threshold == 0.05);
  REQUIRE(pos.conformity_alpha == std::array<double, 3>{0.2, 0.5, 0.8});
}

TEST_CASE("tercile split of 200 users lands 67/67/66 with id tie-break") {
  std::vector<std::pair<double, UserId>> metric;
  for (int u = 0; u < 200; ++u) metric.emplace_back(static_cast<double>(u), static_cast<UserId>(u + 1));
  std::map<UserId, Level> levels;
  detail::assign_terciles(metric, levels);
  std::array<int, 3> counts{0, 0, 0};
  for (const auto& [user, level] : levels) ++counts[static_cast<std::size_t>(level)];
  REQUIRE(counts == std::array<int, 3>{67, 67, 66});
  REQUIRE(levels.at(1) == Level::kLow);
  REQUIRE(levels.at(67) == Level::kLow);    // rank 66 -> 198/200 = 0
  REQUIRE(levels.at(68) == Level::kMid);    // rank 67 -> 201/200 = 1
  REQUIRE(levels.at(134) == Level::kMid);   // rank 133 -> 399/200 = 1
  REQUIRE(levels.at(135) == Level::kHigh);  // rank 134 -> 402/200 = 2
  REQUIRE(levels.at(200) == Level::kHigh);

  // all-equal metrics split purely by user id
  for (auto& [m, u] : metric) m = 7.0;
  levels.clear();
  detail::assign_terciles(metric, levels);
  REQUIRE(levels.at(67) == Level::kLow);
  REQUIRE(levels.at(68) == Level::kMid);
  REQUIRE(levels.at(135) == Level::kHigh);
}

TEST_CASE("population stats derive levels from history shape") {
  Catalog catalog = synth::tiny_catalog({"A", "A", "B", "C", "D"});
  std::map<UserId, std::vector<RawInteraction>> histories;
  // user 1: one interaction, one category, rating far from the mean
  histories[1] = {{1, 1, 5.0, 10}};
  // user 2: three interactions over two categories
  histories[2] = {{2, 1, 1.0, 10}, {2, 2, 3.0, 11}, {2, 3, 3.0, 12}};
  // user 3: five interactions over four categories, ratings at the mean
  histories[3] = {{3, 1, 3.0, 10}, {3, 2, 3.0, 11}, {3, 3, 3.0, 12}, {3, 4, 3.0, 13}, {3, 5, 3.0, 14}};
  std::vector<UserId> population{1, 2, 3};
  PopulationStats stats = compute_population_stats(histories, population, catalog);

  // item 1 (index 0) was rated 5, 1, 3 -> mean 3
  REQUIRE_THAT(stats.item_means.mean(0), Catch::Matchers::WithinAbs(3.0, 1e-12));
  REQUIRE_THAT(stats.item_means.mean(4), Catch::Matchers::WithinAbs(3.0, 1e-12));  // single rating 3
  REQUIRE(stats.activity_level.at(1) == Level::kLow);
  REQUIRE(stats.activity_level.at(2) == Level::kMid);
  REQUIRE(stats.activity_level.at(3) == Level::kHigh);
  REQUIRE(stats.diversity_level.at(1) == Level::kLow);
  REQUIRE(stats.diversity_level.at(3) == Level::kHigh);
  // user 1 deviates from the mean by 2, user 3 by 0 -> user 3 most conformist
  REQUIRE(stats.conformity_level.at(1) == Level::kLow);
  REQUIRE(stats.conformity_level.at(3) == Level::kHigh);

  REQUIRE_THROWS_AS(compute_population_stats(histories, std::vector<UserId>{1, 9}, catalog), ValidationError);
}

TEST_CASE("profile taste weights are normalized category shares") {
  Catalog catalog = synth::tiny_catalog({"A", "A", "B", "C"});
  std::map<UserId, std::vector<RawInteraction>> histories;
  histories[1] = {{1, 1, 4.0, 1}, {1, 2, 4.0, 2}, {1, 3, 4.0, 3}, {1, 4, 4.0, 4}};
  PopulationStats stats = compute_population_stats(histories, {1}, catalog);
  UserProfile p = derive_profile(1, histories[1], catalog, stats);
  REQUIRE(p.user == 1);
  REQUIRE(p.taste_weights.size() == 3);
  double sum = 0.0;
  for (const auto& [cat, w] : p.taste_weights) sum += w;
  REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
  auto weight_of = [&](const std::string& name) {
    for (const auto& [cat, w] : p.taste_weights) {
      if (catalog.category_name(cat) == name) return w;
    }
    return -1.0;
  };
  REQUIRE_THAT(weight_of("A"), Catch::Matchers::WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(weight_of("B"), Catch::Matchers::WithinAbs(0.25, 1e-12));
  REQUIRE_THAT(weight_of("C"), Catch::Matchers::WithinAbs(0.25, 1e-12));
}

TEST_CASE("trait overrides depend on the policy family") {
  UserProfile base;
  base.activity = Level::kMid;
  base.diversity = Level::kMid;
  base.conformity = Level::kLow;

  for (auto kind : {PolicyKind::kPositive, PolicyKind::kWeaklyPositive}) {
    UserProfile p = apply_trait_overrides(base, kind);
    REQUIRE(p.activity == Level::kHigh);
    REQUIRE(p.diversity == Level::kHigh);
    REQUIRE(p.conformity == Level::kLow);  // conformity untouched
  }
  for (auto kind : {PolicyKind::kNegative, PolicyKind::kWeaklyNegative}) {
    UserProfile p = apply_trait_overrides(base, kind);
    REQUIRE(p.activity == Level::kLow);
    REQUIRE(p.diversity == Level::kLow);
    REQUIRE(p.conformity == Level::kLow);
  }
  UserProfile p = apply_trait_overrides(base, PolicyKind::kCustom);
  REQUIRE(p.activity == Level::kMid);
  REQUIRE(p.diversity == Level::kMid);
}

TEST_CASE("rating rule blends crowd mean with taste affinity") {
  Catalog catalog = synth::tiny_catalog({"A", "B", "C"});
  UserProfile profile;
  profile.taste_weights = {{catalog.items()[0].categories[0], 0.6}, {catalog.items()[1].categories[0], 0.4}};
  BehaviorPolicy policy = BehaviorPolicy::make(PolicyKind::kPositive);
  InteractionLog empty;
  ItemMeanTable means = ItemMeanTable::from_log(empty, 3);  // all means default to 3.0

  // full-affinity item: blend of mean 3 and taste term 5
  profile.conformity = Level::kMid;  // alpha = 0.5
  REQUIRE(detail::rate_item(profile, policy, catalog, means, 0) == 4.0);  // 0.5*3 + 0.5*5 = 4
  profile.conformity = Level::kLow;  // alpha = 0.2
  REQUIRE(detail::rate_item(profile, policy, catalog, means, 0) == 5.0);  // 0.6 + 4 = 4.6 -> 5
  profile.conformity = Level::kHigh;  // alpha = 0.8
  REQUIRE(detail::rate_item(profile, policy, catalog, means, 0) == 3.0);  // 2.4 + 1 = 3.4 -> 3

  // zero-affinity item: taste term bottoms out at 1
  profile.conformity = Level::kMid;
  REQUIRE(detail::rate_item(profile, policy, catalog, means, 2) == 2.0);  // 0.5*3 + 0.5*1 = 2

  // half-up rounding at the midpoint
  InteractionLog rated;
  rated.append(9, 0, 2.0, 0);
  ItemMeanTable low_mean = ItemMeanTable::from_log(rated, 3);
  REQUIRE(detail::rate_item(profile, policy, catalog, low_mean, 0) == 4.0);  // 0.5*2 + 0.5*5 = 3.5 -> 4

  // no taste data at all: affinity 0 regardless of category
  UserProfile blank;
  blank.conformity = Level::kMid;
  REQUIRE(detail::rate_item(blank, policy, catalog, means, 0) == 2.0);
}

TEST_CASE("negative family picks top ranks first then taste matches") {
  // categories: X is the taste, Y is filler
  Catalog catalog = synth::tiny_catalog({"Y", "Y", "X", "Y", "X", "Y", "X", "Y", "X", "Y"});
  UserProfile profile;
  profile.taste_weights = {{catalog.items()[2].categories[0], 1.0}};
  profile.activity = Level::kMid;
  profile.conformity = Level::kMid;
  BehaviorPolicy policy = BehaviorPolicy::make(PolicyKind::kNegative);
  InteractionLog empty;
  ItemMeanTable means = ItemMeanTable::from_log(empty, 10);
  RankedPage page = page_of({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

  AgentDecision d = decide_rule_based(profile, policy, page, catalog, means, 77);
  // total = 5: ranks 1-2 in page order, then the first three X items after them
  REQUIRE(picked_items(d) == std::vector<ItemIndex>{0, 1, 2, 4, 6});

  SECTION("low activity shrinks to the defining quota plus one") {
    profile.activity = Level::kLow;  // total = round(2.5) = 3
    d = decide_rule_based(profile, policy, page, catalog, means, 77);
    REQUIRE(picked_items(d) == std::vector<ItemIndex>{0, 1, 2});
  }
  SECTION("high activity expands the taste tail") {
    profile.activity = Level::kHigh;  // total = round(7.5) = 8
    d = decide_rule_based(profile, policy, page, catalog, means, 77);
    REQUIRE(picked_items(d) == std::vector<ItemIndex>{0, 1, 2, 4, 6, 8, 3, 5});
  }
  SECTION("weak variant keeps one top rank") {
    BehaviorPolicy weak = BehaviorPolicy::make(PolicyKind::kWeaklyNegative);
    d = decide_rule_based(profile, weak, page, catalog, means, 77);  // total = 4
    REQUIRE(picked_items(d) == std::vector<ItemIndex>{0, 2, 4, 6});
  }
  SECTION("tiny page caps the quotas") {
    RankedPage small = page_of({5});
    d = decide_rule_based(profile, policy, small, catalog, means, 77);
    REQUIRE(picked_items(d) == std::vector<ItemIndex>{5});
  }
}

TEST_CASE("positive family matches taste in page order and explores the rest") {
  Catalog catalog = synth::tiny_catalog({"X", "Y", "X", "Y", "X", "Y", "X", "Y", "X", "Y"});
  CategoryId x = catalog.items()[0].categories[0];
  UserProfile profile;
  profile.taste_weights = {{x, 1.0}};
  profile.activity = Level::kMid;
  profile.conformity = Level::kMid;
  BehaviorPolicy policy = BehaviorPolicy::make(PolicyKind::kPositive);
  InteractionLog empty;
  ItemMeanTable means = ItemMeanTable::from_log(empty, 10);
  RankedPage page = page_of({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

  AgentDecision d = decide_rule_based(profile, policy, page, catalog, means, 5);
  REQUIRE(d.chosen.size() == 6);  // total = 6: 4 matches + 2 explores
  std::vector<ItemIndex> items = picked_items(d);
  std::vector<ItemIndex> matches(items.begin(), items.begin() + 4);
  REQUIRE(matches == std::vector<ItemIndex>{0, 2, 4, 6});
  for (std::size_t i = 4; i < items.size(); ++i) {
    REQUIRE(catalog.primary_category(items[i]) != x);  // explores never match taste
  }
  // no duplicate picks
  std::set<ItemIndex> unique(items.begin(), items.end());
  REQUIRE(unique.size() == items.size());

  SECTION("same seed reproduces the exploration, another seed may differ") {
    AgentDecision again = decide_rule_based(profile, policy, page, catalog, means, 5);
    REQUIRE(picked_items(again) == items);
  }
  SECTION("high activity grows the match quota, explore quota stays pinned") {
    profile.activity = Level::kHigh;  // total = 9 -> 2 explores + 7 matches, only 5 match
    d = decide_rule_based(profile, policy, page, catalog, means, 5);
    items = picked_items(d);
    REQUIRE(items.size() == 7);  // 5 available matches + 2 explores
    std::vector<ItemIndex> first(items.begin(), items.begin() + 5);
    REQUIRE(first == std::vector<ItemIndex>{0, 2, 4, 6, 8});
  }
  SECTION("weak variant explores once") {
    BehaviorPolicy weak = BehaviorPolicy::make(PolicyKind::kWeaklyPositive);
    d = decide_rule_based(profile, weak, page, catalog, means, 5);  // total = 5
    items = picked_items(d);
    REQUIRE(items.size() == 5);
    int explores = 0;
    for (ItemIndex i : items) explores += catalog.primary_category(i) != x ? 1 : 0;
    REQUIRE(explores == 1);
  }
  SECTION("threshold separates matching from exploration") {
    profile.taste_weights = {{x, 0.04}};  // below the 0.05 threshold: nothing matches
    d = decide_rule_based(profile, policy, page, catalog, means, 5);
    REQUIRE(d.chosen.size() == 2);  // only the explore quota fires
  }
  SECTION("a page with no explorable items still fills the match quota") {
    Catalog all_x = synth::tiny_catalog({"X", "X", "X", "X", "X", "X"});
    UserProfile p2;
    p2.taste_weights = {{all_x.items()[0].categories[0], 1.0}};
    p2.activity = Level::kMid;
    p2.conformity = Level::kMid;
    RankedPage page2 = page_of({0, 1, 2, 3, 4, 5});
    d = decide_rule_based(p2, policy, page2, all_x, means, 5);
    REQUIRE(picked_items(d) == std::vector<ItemIndex>{0, 1, 2, 3});
  }
}

TEST_CASE("every decision yields at least one pick with in-range ratings") {
  Catalog catalog = synth::tiny_catalog({"X", "Y"});
  InteractionLog empty;
  ItemMeanTable means = ItemMeanTable::from_log(empty, 2);
  RankedPage page = page_of({0, 1});

  UserProfile blank;  // no taste data, custom policy with zero quotas
  BehaviorPolicy policy;
  policy.kind = PolicyKind::kPositive;
  policy.n_match = 0;
  policy.n_explore = 0;
  AgentDecision d = decide_rule_based(blank, policy, page, catalog, means, 1);
  REQUIRE(d.chosen.size() == 1);
  REQUIRE(d.chosen[0].first == 0);

  RankedPage none = page_of({});
  d = decide_rule_based(blank, policy, none, catalog, means, 1);
  REQUIRE(d.chosen.empty());  // nothing shown, nothing picked

  // ratings stay in [1, 5] over a spread of profiles
  synth::Spec sspec;
  sspec.users = 12;
  sspec.items = 40;
  synth::Data data = synth::make(sspec);
  std::map<UserId, std::vector<RawInteraction>> histories;
  for (const auto& r : data.raw) histories[r.user].push_back(r);
  std::vector<UserId> population;
  for (const auto& [user, h] : histories) population.push_back(user);
  PopulationStats stats = compute_population_stats(histories, population, data.catalog);
  ItemMeanTable pool_means = stats.item_means;
  RankedPage wide;
  wide.user = 1;
  wide.round = 1;
  for (ItemIndex i = 0; i < 20; ++i) wide.items.push_back(i);
  wide.scores.assign(20, 1.0);
  for (UserId user : population) {
    UserProfile p = derive_profile(user, histories[user], data.catalog, stats);
    for (auto kind : {PolicyKind::kPositive, PolicyKind::kNegative}) {
      AgentDecision dec =
          decide_rule_based(p, BehaviorPolicy::make(kind), wide, data.catalog, pool_means, 42 + static_cast<std::uint64_t>(user));
      REQUIRE_FALSE(dec.chosen.empty());
      for (const auto& [item, rating] : dec.chosen) {
        REQUIRE(rating >= 1.0);
        REQUIRE(rating <= 5.0);
        REQUIRE(rating == std::floor(rating));  // whole-star ratings
      }
    }
  }
}
