// End-to-end acceptance gate. Each numbered check prints one PASS/FAIL line
// (plus indented measurements) and the process exits non-zero if any check
// fails. The simulation checks run on a seeded synthetic benchmark built here:
// 50 users, 300 items, 10 categories, concentrated tastes that share one
// dominant category, so the contrast between broadening and conforming
// behavior has room to show up in page composition.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bubblesim/artifacts.hpp"
#include "bubblesim/commands.hpp"
#include "support/bench.hpp"

namespace fs = std::filesystem;
using namespace bubblesim;

namespace {

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

struct Gate {
  int failed = 0;
  int passed = 0;

  void check(int id, const std::string& label, bool ok) {
    std::printf("%s %2d. %s\n", ok ? "PASS" : "FAIL", id, label.c_str());
    std::fflush(stdout);
    if (ok) {
      ++passed;
    } else {
      ++failed;
    }
  }

  static void detail(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    std::printf("        ");
    std::vprintf(fmt, args);
    std::printf("\n");
    va_end(args);
    std::fflush(stdout);
  }
};

std::string join_doubles(const std::vector<double>& xs, const char* fmt = "%.3f") {
  std::string out;
  char buf[64];
  for (double x : xs) {
    std::snprintf(buf, sizeof(buf), fmt, x);
    if (!out.empty()) out += " ";
    out += buf;
  }
  return out;
}

// The contrastive checks run on the synthetic benchmark in support/bench.hpp:
// 50 users, 300 items, 10 categories, concentrated tastes, a diverse crust of
// minor-category gateways over a mainstream wall in the cold popularity
// ranking, and per-user anchor items for leave-one-out evaluation.
using bench::Bench;
using bench::bench_config;
using bench::kBenchItems;
using bench::kBenchUsers;
using bench::make_bench;

double mean_negative_diversity(const ContrastPair& pair, const Catalog& catalog, int round) {
  for (const RoundRecord& r : pair.negative.rounds) {
    if (r.round != round) continue;
    double sum = 0;
    for (const RankedPage& page : r.pages) sum += page_diversity(page, catalog);
    return r.pages.empty() ? 0.0 : sum / static_cast<double>(r.pages.size());
  }
  return 0.0;
}

// Per-seed benchmark measurements shared by the directional checks.
struct SeedResult {
  double bep_pop = 0, bep_bpr = 0, bep_rand = 0;
  double bep_pop_weak = 0, bep_bpr_weak = 0;
  double neg_pop_first = 0, neg_pop_last = 0;
  double neg_bpr_first = 0, neg_bpr_last = 0;
  double hr_pop = 0, hr_rand = 0;
};

const std::vector<std::uint64_t> kSeeds = {1, 2, 3, 4, 5};

std::vector<SeedResult> run_benchmarks(double& directional_seconds) {
  std::vector<SeedResult> out;
  auto t0 = std::chrono::steady_clock::now();
  double other = 0;  // time spent on runs outside the directional-check budget
  for (std::uint64_t seed : kSeeds) {
    Bench bench = make_bench(seed);
    SeedResult r;

    auto run = [&](RecommenderKind kind, PolicyKind pos, PolicyKind neg) {
      SimulationConfig cfg = bench_config(kind, seed);
      cfg.positive_policy = BehaviorPolicy::make(pos);
      cfg.negative_policy = BehaviorPolicy::make(neg);
      return run_contrastive(cfg, bench.catalog, bench.raw);
    };

    {
      ContrastPair pop = run(RecommenderKind::kPopularity, PolicyKind::kPositive, PolicyKind::kNegative);
      r.bep_pop = bep(pop, bench.catalog).overall;
      r.neg_pop_first = mean_negative_diversity(pop, bench.catalog, 1);
      r.neg_pop_last = mean_negative_diversity(pop, bench.catalog, 8);
    }
    {
      ContrastPair mf = run(RecommenderKind::kBprMf, PolicyKind::kPositive, PolicyKind::kNegative);
      r.bep_bpr = bep(mf, bench.catalog).overall;
      r.neg_bpr_first = mean_negative_diversity(mf, bench.catalog, 1);
      r.neg_bpr_last = mean_negative_diversity(mf, bench.catalog, 8);
    }

    auto t1 = std::chrono::steady_clock::now();
    {
      ContrastPair rnd = run(RecommenderKind::kRandom, PolicyKind::kPositive, PolicyKind::kNegative);
      r.bep_rand = bep(rnd, bench.catalog).overall;
      ContrastPair pop_w =
          run(RecommenderKind::kPopularity, PolicyKind::kWeaklyPositive, PolicyKind::kWeaklyNegative);
      r.bep_pop_weak = bep(pop_w, bench.catalog).overall;
      ContrastPair bpr_w = run(RecommenderKind::kBprMf, PolicyKind::kWeaklyPositive, PolicyKind::kWeaklyNegative);
      r.bep_bpr_weak = bep(bpr_w, bench.catalog).overall;

      RecommenderSpec pop_spec, rand_spec;
      pop_spec.kind = RecommenderKind::kPopularity;
      pop_spec.seed = seed;
      rand_spec.kind = RecommenderKind::kRandom;
      rand_spec.seed = seed;
      r.hr_pop = evaluate_accuracy(pop_spec, bench.raw, bench.catalog, {20}).hr.at(20);
      r.hr_rand = evaluate_accuracy(rand_spec, bench.raw, bench.catalog, {20}).hr.at(20);
    }
    other += std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    out.push_back(r);
  }
  directional_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() - other;
  return out;
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

void check_bep_oracle(Gate& gate) {
  auto t0 = std::chrono::steady_clock::now();
  // two users over three rounds, by-round diversity vectors
  std::vector<std::vector<double>> pos = {{5, 7}, {6, 6}, {6, 6}};
  std::vector<std::vector<double>> neg = {{4, 2}, {4, 4}, {3, 3}};
  BepSeries series = bep_from_series(pos, neg);
  double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();

  std::vector<double> expected = {2.0, 1.5, 2.0};
  bool ok = series.per_round.size() == 3;
  for (std::size_t i = 0; ok && i < 3; ++i) ok = std::abs(series.per_round[i] - expected[i]) <= 1e-12;
  ok = ok && std::abs(series.overall - 11.0 / 6.0) <= 1e-12;
  gate.check(1, "contrast ratio oracle: per-round [2.0 1.5 2.0], mean 11/6", ok);
  Gate::detail("per_round = %s, overall = %.15f, %.1f us", join_doubles(series.per_round).c_str(), series.overall,
               us);
}

void check_self_contrast(Gate& gate) {
  Bench bench = make_bench(7);
  SimulationConfig cfg = bench_config(RecommenderKind::kPopularity, 7);
  cfg.rounds = 3;
  ContrastPair pair = run_contrastive(cfg, bench.catalog, bench.raw);
  pair.negative = pair.positive;  // one run fed in as both arms
  BepReport report = bep(pair, bench.catalog);

  bool ok = report.overall == 1.0;
  for (double r : report.per_round) ok = ok && r == 1.0;
  for (const auto& [user, value] : report.per_user) ok = ok && value == 1.0;
  gate.check(2, "self-contrast is exactly 1.0 per round, overall, and per user", ok);
  Gate::detail("overall = %.17f over %zu rounds, %zu users", report.overall, report.per_round.size(),
               report.per_user.size());
}

void check_scale_invariance(Gate& gate) {
  std::vector<std::vector<double>> pos = {{5, 7}, {6, 6}, {6, 6}};
  std::vector<std::vector<double>> neg = {{4, 2}, {4, 4}, {3, 3}};
  BepSeries base = bep_from_series(pos, neg);
  bool ok = true;
  double worst = 0;
  for (double factor : {0.5, 3.0, 10.0}) {
    auto scale = [&](std::vector<std::vector<double>> series) {
      for (auto& row : series) {
        for (double& x : row) x *= factor;
      }
      return series;
    };
    BepSeries scaled = bep_from_series(scale(pos), scale(neg));
    double diff = std::abs(scaled.overall - base.overall);
    for (std::size_t i = 0; i < base.per_round.size(); ++i) {
      diff = std::max(diff, std::abs(scaled.per_round[i] - base.per_round[i]));
    }
    worst = std::max(worst, diff);
    ok = ok && diff < 1e-12;
  }
  gate.check(3, "scaling both arms by 0.5 / 3 / 10 leaves the ratio unchanged", ok);
  Gate::detail("largest deviation = %.3g", worst);
}

void check_directional_contrast(Gate& gate, const std::vector<SeedResult>& results, double seconds) {
  int pop_hits = 0, bpr_hits = 0, pop_declines = 0, bpr_declines = 0;
  std::vector<double> pops, bprs;
  for (const SeedResult& r : results) {
    pops.push_back(r.bep_pop);
    bprs.push_back(r.bep_bpr);
    pop_hits += r.bep_pop >= 1.05;
    bpr_hits += r.bep_bpr >= 1.05;
    pop_declines += r.neg_pop_last < r.neg_pop_first;
    bpr_declines += r.neg_bpr_last < r.neg_bpr_first;
  }
  int n = static_cast<int>(results.size());
  bool ok = pop_hits >= 4 && bpr_hits >= 4 && pop_declines == n && bpr_declines == n && seconds < 120.0;
  gate.check(4, "directional contrast: ratio >= 1.05 on 4/5 seeds, conforming pages narrow", ok);
  Gate::detail("popularity ratios: %s (%d/%d over 1.05)", join_doubles(pops).c_str(), pop_hits, n);
  Gate::detail("bpr_mf ratios:     %s (%d/%d over 1.05)", join_doubles(bprs).c_str(), bpr_hits, n);
  Gate::detail("conforming-arm mean diversity falls round 1 -> 8: popularity %d/%d, bpr_mf %d/%d", pop_declines, n,
               bpr_declines, n);
  Gate::detail("runtime %.1f s (budget 120 s)", seconds);
}

void check_accuracy_bubble_ordering(Gate& gate, const std::vector<SeedResult>& results) {
  int bep_order = 0, hr_order = 0;
  std::vector<double> rands, pops, hr_pops, hr_rands;
  for (const SeedResult& r : results) {
    rands.push_back(r.bep_rand);
    pops.push_back(r.bep_pop);
    hr_pops.push_back(r.hr_pop);
    hr_rands.push_back(r.hr_rand);
    bep_order += r.bep_rand > r.bep_pop;
    hr_order += r.hr_pop > r.hr_rand;
  }
  int n = static_cast<int>(results.size());
  bool ok = bep_order >= 4 && hr_order >= 4;
  gate.check(5, "ordering: random ratio above popularity, popularity HR@20 above random", ok);
  Gate::detail("ratio(random):     %s", join_doubles(rands).c_str());
  Gate::detail("ratio(popularity): %s", join_doubles(pops).c_str());
  Gate::detail("ratio ordering holds on %d/%d seeds, HR ordering on %d/%d seeds", bep_order, n, hr_order, n);
  Gate::detail("hr@20 popularity: %s | random: %s", join_doubles(hr_pops).c_str(), join_doubles(hr_rands).c_str());
  if (bep_order < 4) {
    Gate::detail("note: a random recommender ignores training feedback, so its pages are");
    Gate::detail("identical in distribution for both arms and its ratio pins to ~1.0; any");
    Gate::detail("recommender that satisfies check 4 (ratio >= 1.05) must exceed it.");
  }
}

void check_weakening(Gate& gate, const std::vector<SeedResult>& results) {
  bool ok = true;
  std::vector<double> pop_pairs, bpr_pairs;
  for (const SeedResult& r : results) {
    ok = ok && r.bep_pop_weak <= r.bep_pop && r.bep_bpr_weak <= r.bep_bpr;
    pop_pairs.push_back(r.bep_pop - r.bep_pop_weak);
    bpr_pairs.push_back(r.bep_bpr - r.bep_bpr_weak);
  }
  gate.check(6, "weakened behaviors never raise the ratio, on any seed or recommender", ok);
  Gate::detail("ratio minus weakened ratio, popularity: %s", join_doubles(pop_pairs).c_str());
  Gate::detail("ratio minus weakened ratio, bpr_mf:     %s", join_doubles(bpr_pairs).c_str());
  Gate::detail("large-scale reference (context, not a target): random 1.35 -> 1.20, TiCoSeRec 1.24 -> 1.05");
}

void check_randomization_endpoints(Gate& gate) {
  Bench bench = make_bench(1);

  // fraction 0 must replay the unwrapped run byte for byte
  SimulationConfig plain = bench_config(RecommenderKind::kPopularity, 1);
  plain.rounds = 4;
  SimulationConfig zero = plain;
  zero.randomize_fraction = 0.0;
  ContrastPair a = run_contrastive(plain, bench.catalog, bench.raw);
  ContrastPair b = run_contrastive(zero, bench.catalog, bench.raw);
  bool bit_exact = pages_csv(a, bench.catalog) == pages_csv(b, bench.catalog) &&
                   decisions_csv(a, bench.catalog) == decisions_csv(b, bench.catalog) &&
                   log_csv(a, bench.catalog) == log_csv(b, bench.catalog);

  // fraction 1 should be statistically indistinguishable from a random
  // recommender: its mean ratio must land inside the random ratio's 95%
  // confidence interval over ten paired seeds.
  std::vector<double> wrapped, random_ratio;
  for (std::uint64_t seed = 11; seed <= 20; ++seed) {
    Bench b10 = make_bench(seed);
    SimulationConfig full = bench_config(RecommenderKind::kPopularity, seed);
    full.randomize_fraction = 1.0;
    wrapped.push_back(bep(run_contrastive(full, b10.catalog, b10.raw), b10.catalog).overall);
    SimulationConfig rnd = bench_config(RecommenderKind::kRandom, seed);
    random_ratio.push_back(bep(run_contrastive(rnd, b10.catalog, b10.raw), b10.catalog).overall);
  }
  auto mean = [](const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  double mw = mean(wrapped), mr = mean(random_ratio);
  double var = 0;
  for (double x : random_ratio) var += (x - mr) * (x - mr);
  double sd = std::sqrt(var / static_cast<double>(random_ratio.size() - 1));
  double half = 1.96 * sd / std::sqrt(static_cast<double>(random_ratio.size()));
  bool in_ci = mw >= mr - half && mw <= mr + half;

  gate.check(7, "randomization endpoints: fraction 0 is bit-exact, fraction 1 matches random", bit_exact && in_ci);
  Gate::detail("fraction 0 artifacts byte-identical: %s", bit_exact ? "yes" : "NO");
  Gate::detail("fraction 1 mean ratio %.4f vs random CI [%.4f, %.4f] (mean %.4f, sd %.4f)", mw, mr - half, mr + half,
               mr, sd);

  // Mid-fraction behavior is reported for context, not gated: the large-scale
  // study saw a non-monotonic dip near 30% randomization.
  Bench bench1 = make_bench(1);
  std::vector<double> fractions = {0.0, 0.3, 1.0};
  std::string line;
  std::vector<double> mid_beps;
  for (double fraction : fractions) {
    SimulationConfig cfg = bench_config(RecommenderKind::kPopularity, 1);
    cfg.randomize_fraction = fraction;
    double ratio = bep(run_contrastive(cfg, bench1.catalog, bench1.raw), bench1.catalog).overall;
    RecommenderSpec spec;
    spec.kind = RecommenderKind::kPopularity;
    spec.seed = 1;
    WrappedAccuracy acc =
        evaluate_wrapped_accuracy(spec, bench1.raw, bench1.catalog, 20, fraction, mix_seed({1, kSeedEval}));
    char buf[96];
    std::snprintf(buf, sizeof(buf), "f=%.1f ratio=%.3f hr@20=%.3f  ", fraction, ratio, acc.hr);
    line += buf;
    mid_beps.push_back(ratio);
  }
  Gate::detail("fraction sweep (reported, not gated): %s", line.c_str());
  Gate::detail("dip at 30%%: %s", mid_beps[1] < std::min(mid_beps[0], mid_beps[2]) ? "observed" : "not observed");
}

void check_ranking_oracle(Gate& gate) {
  // 5 users, 8 items, 2 categories; counts give an unambiguous ranking.
  std::vector<Catalog::ItemSpec> items;
  for (int i = 1; i <= 8; ++i) {
    items.push_back(Catalog::ItemSpec{i, "Item " + std::to_string(i), {i <= 4 ? "a" : "b"}});
  }
  Catalog catalog = Catalog::build(std::move(items));
  // user -> interaction sequence; the timestamp-latest item is held out
  std::vector<std::vector<ItemId>> history = {
      {1, 2, 3}, {1, 2, 4}, {2, 3, 1}, {3, 4, 5}, {1, 5, 2},
  };
  std::vector<RawInteraction> raw;
  for (std::size_t u = 0; u < history.size(); ++u) {
    for (std::size_t t = 0; t < history[u].size(); ++t) {
      RawInteraction r;
      r.user = static_cast<UserId>(u + 1);
      r.item = history[u][t];
      r.rating = 4.0;
      r.timestamp = static_cast<std::int64_t>(t + 1);
      raw.push_back(r);
    }
  }
  raw = canonicalize_interactions(std::move(raw));

  RecommenderSpec spec;
  spec.kind = RecommenderKind::kPopularity;
  std::vector<int> cutoffs = {1, 2, 4, 8};
  AccuracyReport got = evaluate_accuracy(spec, raw, catalog, cutoffs);

  // Exhaustive oracle: recount, rescore, and rank by brute force.
  std::map<ItemId, int> counts;
  std::map<UserId, std::set<ItemId>> train;
  std::map<UserId, ItemId> held;
  for (std::size_t u = 0; u < history.size(); ++u) {
    UserId user = static_cast<UserId>(u + 1);
    for (std::size_t t = 0; t + 1 < history[u].size(); ++t) {
      counts[history[u][t]] += 1;
      train[user].insert(history[u][t]);
    }
    held[user] = history[u].back();
  }
  std::map<int, double> hr, ndcg;
  double rr = 0;
  std::map<UserId, int> oracle_ranks;
  for (const auto& [user, target] : held) {
    std::vector<ItemId> candidates;
    for (int i = 1; i <= 8; ++i) {
      if (!train[user].count(i)) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](ItemId a, ItemId b) {
      if (counts[a] != counts[b]) return counts[a] > counts[b];
      return a < b;
    });
    int rank = 1 + static_cast<int>(std::find(candidates.begin(), candidates.end(), target) - candidates.begin());
    oracle_ranks[user] = rank;
    rr += 1.0 / rank;
    for (int k : cutoffs) {
      if (rank <= k) {
        hr[k] += 1.0;
        ndcg[k] += 1.0 / std::log2(rank + 1.0);
      }
    }
  }
  double n = static_cast<double>(held.size());
  bool exact = got.map == rr / n;
  for (int k : cutoffs) {
    exact = exact && got.hr.at(k) == hr[k] / n && got.ndcg.at(k) == ndcg[k] / n;
  }
  for (const auto& [user, rank] : oracle_ranks) exact = exact && got.ranks.at(user) == rank;

  // Random recommender sanity band on the benchmark: HR@20 within 3 sigma of
  // its null expectation (the held-out item uniform over each candidate set).
  Bench bench = make_bench(1);
  RecommenderSpec rnd;
  rnd.kind = RecommenderKind::kRandom;
  rnd.seed = 99;
  AccuracyReport rand_report = evaluate_accuracy(rnd, bench.raw, bench.catalog, {20});
  std::map<UserId, std::size_t> per_user;
  for (const RawInteraction& r : bench.raw) per_user[r.user] += 1;
  double p_sum = 0, var_sum = 0, users = 0;
  for (const auto& [user, cnt] : per_user) {
    if (cnt < 2) continue;
    double candidates = static_cast<double>(kBenchItems) - static_cast<double>(cnt - 1);
    double p = 20.0 / candidates;
    p_sum += p;
    var_sum += p * (1 - p);
    users += 1;
  }
  double expectation = p_sum / users;
  double sigma = std::sqrt(var_sum) / users;
  bool in_band = std::abs(rand_report.hr.at(20) - expectation) <= 3 * sigma;

  gate.check(8, "ranking metrics equal a brute-force oracle; random HR@20 sits in its null band", exact && in_band);
  Gate::detail("oracle ranks %s, map %.6f", [&] {
    std::string s;
    for (auto& [u, rk] : oracle_ranks) s += std::to_string(rk) + " ";
    return s;
  }().c_str(), got.map);
  Gate::detail("random hr@20 = %.4f, null expectation %.4f +- %.4f (3 sigma)", rand_report.hr.at(20), expectation,
               3 * sigma);
}

void check_bpr_gradient(Gate& gate) {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  const int dim = 16;
  const double reg = 0.03;
  const double eps = 1e-5;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(dim), qi(dim), qj(dim);
    for (int f = 0; f < dim; ++f) {
      p[f] = rng.normal(0.0, 0.5);
      qi[f] = rng.normal(0.0, 0.5);
      qj[f] = rng.normal(0.0, 0.5);
    }
    BprTripleGrad analytic = bpr_triple_gradient(p, qi, qj, reg);

    auto fd = [&](std::vector<double>& vec, int f) {
      double keep = vec[f];
      vec[f] = keep + eps;
      double hi = bpr_triple_loss(p.data(), qi.data(), qj.data(), dim, reg);
      vec[f] = keep - eps;
      double lo = bpr_triple_loss(p.data(), qi.data(), qj.data(), dim, reg);
      vec[f] = keep;
      return (hi - lo) / (2 * eps);
    };
    double max_abs = 0, max_fd = 0;
    for (int f = 0; f < dim; ++f) {
      max_abs = std::max({max_abs, std::abs(analytic.user[f] - fd(p, f)), std::abs(analytic.pos[f] - fd(qi, f)),
                          std::abs(analytic.neg[f] - fd(qj, f))});
    }
    for (int f = 0; f < dim; ++f) {
      max_fd = std::max({max_fd, std::abs(fd(p, f)), std::abs(fd(qi, f)), std::abs(fd(qj, f))});
    }
    // relative to the largest gradient entry of the triple, which keeps the
    // ratio meaningful when an individual component crosses zero
    worst = std::max(worst, max_abs / std::max(max_fd, 1e-8));
  }
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  gate.check(9, "pairwise-loss gradients match central differences on 100 seeded triples", worst < 1e-4 && ms < 1000);
  Gate::detail("max relative error %.3g (gate 1e-4), %.0f ms (gate 1000 ms)", worst, ms);
}

void check_cli_determinism(Gate& gate, const fs::path& scratch) {
  fs::path dir = scratch / "determinism";
  fs::create_directories(dir);
  Bench bench = make_bench(1);
  write_snapshot(bench.catalog, bench.raw, (dir / "data").string());
  std::string config = "output_dir = \"" + (dir / "out").string() + "\"\n" +
                       "[dataset]\ninteractions = \"" + (dir / "data" / "interactions.csv").string() +
                       "\"\nitems = \"" + (dir / "data" / "items.csv").string() +
                       "\"\n[simulation]\nrounds = 4\nfrequent_pool = 50\nsample_size = 12\nmaster_seed = 7\n" +
                       "[recommender]\nkind = \"popularity\"\n";
  write_file((dir / "config.toml").string(), config);

  CliOverrides opt;
  opt.config_path = (dir / "config.toml").string();
  opt.quiet = true;

  const std::vector<std::string> names = {"manifest.json", "pages.csv",    "decisions.csv",
                                          "log.csv",       "profiles.csv", "bep_report.json"};
  bool ok = cmd_contrast(opt) == 0;
  std::map<std::string, std::string> first;
  for (const std::string& name : names) first[name] = read_file((dir / "out" / name).string());
  ok = ok && cmd_contrast(opt) == 0;
  std::string differing;
  for (const std::string& name : names) {
    if (read_file((dir / "out" / name).string()) != first[name]) differing += name + " ";
  }
  ok = ok && differing.empty();
  gate.check(10, "repeated contrast command writes byte-identical artifacts", ok);
  Gate::detail("%s", differing.empty() ? "all six artifacts identical across runs"
                                       : ("differing: " + differing).c_str());
}

void check_entropy_closed_forms(Gate& gate) {
  Catalog catalog = [] {
    std::vector<Catalog::ItemSpec> items;
    for (int i = 1; i <= 8; ++i) {
      items.push_back(Catalog::ItemSpec{i, "Item " + std::to_string(i), {"cat" + std::to_string((i - 1) / 2)}});
    }
    return Catalog::build(std::move(items));
  }();  // 8 items, 4 categories, 2 items each

  auto page_of = [&](std::vector<ItemId> ids) {
    RankedPage page;
    page.user = 1;
    page.round = 1;
    for (ItemId id : ids) {
      page.items.push_back(catalog.require_index(id));
      page.scores.push_back(1.0);
    }
    return page;
  };

  RankedPage uniform = page_of({1, 3, 5, 7});      // one item from each category
  RankedPage single = page_of({1, 2});             // one category only
  RankedPage covering = page_of({1, 2, 3, 5, 7});  // every category present

  bool ok = std::abs(standardized_entropy(uniform, catalog) - 1.0) <= 1e-12 &&
            std::abs(standardized_entropy(single, catalog) - 0.0) <= 1e-12 &&
            std::abs(category_coverage(covering, catalog) - 1.0) <= 1e-12;
  gate.check(11, "entropy and coverage closed forms: uniform 1.0, single 0.0, full coverage 1.0", ok);
  Gate::detail("uniform entropy %.17f, single %.17f, coverage %.17f", standardized_entropy(uniform, catalog),
               standardized_entropy(single, catalog), category_coverage(covering, catalog));
}

// Counts requests; hands every request to a canned decision that always picks
// the first item on the page with a 5-star rating.
class MockTransport final : public Transport {
 public:
  int calls = 0;

  HttpResponse post(const std::string&, const std::vector<std::pair<std::string, std::string>>&,
                    const std::string& body, int) override {
    ++calls;
    nlohmann::json request = nlohmann::json::parse(body);
    std::string prompt = request["messages"][1]["content"].get<std::string>();
    std::size_t at = prompt.find("item_id=");
    if (at == std::string::npos) throw std::runtime_error("mock transport saw a prompt without any item");
    ItemId item = 0;
    for (std::size_t i = at + 8; i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i])); ++i) {
      item = item * 10 + (prompt[i] - '0');
    }
    nlohmann::json decision = {{"chosen", {{{"item_id", item}, {"rating", 5}}}}};
    nlohmann::json reply = {{"choices", {{{"message", {{"content", decision.dump()}}}}}}};
    HttpResponse resp;
    resp.status = 200;
    resp.body = reply.dump();
    return resp;
  }
};

void check_llm_bridge(Gate& gate, const fs::path& scratch) {
  Bench bench = make_bench(3);
  SimulationConfig cfg = bench_config(RecommenderKind::kPopularity, 3);
  cfg.rounds = 2;
  cfg.sample_size = 6;
  cfg.page_size = 10;

  // Bridge disabled: the recording transport must see zero requests and every
  // decision must come from the rule-based path.
  MockTransport idle;
  ContrastPair plain = run_contrastive(cfg, bench.catalog, bench.raw, nullptr);
  bool no_requests = idle.calls == 0;
  for (const RunRecord* run : {&plain.positive, &plain.negative}) {
    for (const RoundRecord& round : run->rounds) {
      for (const AgentDecision& d : round.decisions) {
        no_requests = no_requests && d.provenance == AgentDecision::Provenance::kRuleBased;
      }
    }
  }

  // Bridge enabled against the mock: every decision mirrors the mock exactly
  // and every exchange lands in the trace.
  fs::path trace_path = scratch / "llm_trace.jsonl";
  MockTransport mock;
  LlmConfig llm;
  llm.endpoint_url = "http://mock.invalid/v1/chat/completions";
  llm.model_name = "mock-model";
  llm.max_retries = 0;
  llm.api_key_env_var.clear();
  bool mirrored = true;
  {
    LlmDecisionMaker decider(llm, mock, trace_path.string(), cfg.master_seed);
    ContrastPair wired = run_contrastive(cfg, bench.catalog, bench.raw, &decider);
    for (const RunRecord* run : {&wired.positive, &wired.negative}) {
      for (const RoundRecord& round : run->rounds) {
        for (std::size_t i = 0; i < round.decisions.size(); ++i) {
          const AgentDecision& d = round.decisions[i];
          mirrored = mirrored && d.provenance == AgentDecision::Provenance::kLlm && d.chosen.size() == 1 &&
                     d.chosen[0].first == round.pages[i].items[0] && d.chosen[0].second == 5.0;
        }
      }
    }
  }
  int expected = 2 /*arms*/ * cfg.rounds * cfg.sample_size;
  std::string trace = read_file(trace_path.string());
  int lines = 0;
  bool lines_parse = true;
  std::size_t pos = 0;
  while (pos < trace.size()) {
    std::size_t end = trace.find('\n', pos);
    if (end == std::string::npos) break;
    std::string line = trace.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    ++lines;
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    lines_parse = lines_parse && !row.is_discarded() && row["status"] == 200 && row["attempt"] == 1;
  }
  bool traced = mock.calls == expected && lines == expected && lines_parse;

  gate.check(12, "bridge isolation: zero requests when disabled, mock decisions mirrored and traced",
             no_requests && mirrored && traced);
  Gate::detail("disabled run: %d requests observed", idle.calls);
  Gate::detail("mock run: %d requests, %d trace lines (expected %d), decisions mirrored: %s", mock.calls, lines,
               expected, mirrored ? "yes" : "NO");
}

}  // namespace

int main() {
  fs::path scratch = fs::temp_directory_path() / "bubblesim_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  Gate gate;
  check_bep_oracle(gate);
  check_self_contrast(gate);
  check_scale_invariance(gate);

  double directional_seconds = 0;
  std::vector<SeedResult> results = run_benchmarks(directional_seconds);
  check_directional_contrast(gate, results, directional_seconds);
  check_accuracy_bubble_ordering(gate, results);
  check_weakening(gate, results);
  check_randomization_endpoints(gate);
  check_ranking_oracle(gate);
  check_bpr_gradient(gate);
  check_cli_determinism(gate, scratch);
  check_entropy_closed_forms(gate);
  check_llm_bridge(gate, scratch);

  std::printf("%d of %d checks passed\n", gate.passed, gate.passed + gate.failed);
  fs::remove_all(scratch);
  return gate.failed == 0 ? 0 : 1;
}
