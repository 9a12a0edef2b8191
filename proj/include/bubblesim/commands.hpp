#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bubblesim/artifacts.hpp"
#include "bubblesim/config.hpp"
#include "bubblesim/llm.hpp"
#include "bubblesim/llm_http.hpp"
#include "bubblesim/metrics.hpp"
#include "bubblesim/svg.hpp"

namespace bubblesim {

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // replaces master_seed and recommender seed
  std::string out;                    // replaces output_dir
  bool llm = false;                   // forces llm_enabled
  bool quiet = false;
};

struct CommandContext {
  RunConfig cfg;
  Catalog catalog;
  std::vector<RawInteraction> raw;
  RunInputs inputs;
  std::filesystem::path out_dir;
  bool quiet = false;

  void say(const std::string& line) const {
    if (!quiet) std::cout << line << "\n";
  }

  std::string path(const std::string& name) const { return (out_dir / name).string(); }
};

inline CommandContext load_context(const CliOverrides& opt, bool need_dataset) {
  CommandContext ctx;
  ctx.quiet = opt.quiet;
  ctx.cfg = opt.config_path.empty() ? RunConfig{} : load_run_config(opt.config_path);
  if (opt.seed) {
    ctx.cfg.sim.master_seed = *opt.seed;
    ctx.cfg.sim.recommender.seed = *opt.seed;
  }
  if (!opt.out.empty()) ctx.cfg.output_dir = opt.out;
  if (opt.llm) ctx.cfg.llm_enabled = true;
  ctx.out_dir = ctx.cfg.output_dir;
  std::filesystem::create_directories(ctx.out_dir);

  if (need_dataset) {
    if (ctx.cfg.dataset.interactions.empty() || ctx.cfg.dataset.items.empty()) {
      throw ValidationError("config must set dataset.interactions and dataset.items");
    }
    if (ctx.cfg.dataset.format == "movielens") {
      std::tie(ctx.catalog, ctx.raw) = load_movielens(ctx.cfg.dataset.interactions, ctx.cfg.dataset.items);
    } else {
      std::tie(ctx.catalog, ctx.raw) = load_generic_csv(ctx.cfg.dataset.interactions, ctx.cfg.dataset.items);
    }
    ctx.inputs = hash_inputs(ctx.cfg.dataset);
  }
  return ctx;
}

namespace detail {

inline std::size_t count_users(const std::vector<RawInteraction>& raw) {
  std::set<UserId> users;
  for (const RawInteraction& r : raw) users.insert(r.user);
  return users.size();
}

struct DeciderBundle {
  std::unique_ptr<HttplibTransport> transport;
  std::unique_ptr<LlmDecisionMaker> llm;

  DecisionMaker* get() { return llm ? llm.get() : nullptr; }
};

inline DeciderBundle make_decider(const CommandContext& ctx) {
  DeciderBundle bundle;
  if (!ctx.cfg.llm_enabled) return bundle;
  bundle.transport = std::make_unique<HttplibTransport>();
  bundle.llm = std::make_unique<LlmDecisionMaker>(ctx.cfg.llm, *bundle.transport, ctx.path("llm_trace.jsonl"),
                                                  ctx.cfg.sim.master_seed);
  return bundle;
}

}  // namespace detail

// ingest: validate and summarize the dataset, write a canonical CSV snapshot.
inline int cmd_ingest(const CliOverrides& opt, bool emit_defaults) {
  if (emit_defaults) {
    CommandContext ctx = load_context(opt, false);
    std::string path = ctx.path("config_reference.toml");
    write_file(path, default_config_text());
    ctx.say("wrote " + path);
    if (ctx.cfg.dataset.interactions.empty()) return 0;
  }
  CommandContext ctx = load_context(opt, true);
  ctx.say("users=" + std::to_string(detail::count_users(ctx.raw)) + " items=" +
          std::to_string(ctx.catalog.num_items()) + " categories=" + std::to_string(ctx.catalog.num_categories()) +
          " interactions=" + std::to_string(ctx.raw.size()));
  std::string snapshot_dir = ctx.path("snapshot");
  write_snapshot(ctx.catalog, ctx.raw, snapshot_dir);
  ctx.say("wrote " + snapshot_dir + "/items.csv and interactions.csv");
  return 0;
}

// contrast: the paired positive/negative simulation plus its report bundle.
inline int cmd_contrast(const CliOverrides& opt) {
  CommandContext ctx = load_context(opt, true);
  detail::DeciderBundle decider = detail::make_decider(ctx);
  ContrastPair pair = run_contrastive(ctx.cfg.sim, ctx.catalog, ctx.raw, decider.get());
  BepReport report = bep(pair, ctx.catalog);

  nlohmann::json stats = {
      {"dropped_merges", {{"positive", pair.positive.dropped_merges}, {"negative", pair.negative.dropped_merges}}},
      {"replacement_shortfall",
       {{"positive", pair.positive.replacement_shortfall}, {"negative", pair.negative.replacement_shortfall}}},
      {"cohort_size", pair.cohort.size()},
  };
  if (decider.llm) {
    stats["llm"] = {{"fallbacks", decider.llm->fallbacks()}, {"parse_drops", decider.llm->parse_drops()}};
  }
  write_json(ctx.path("manifest.json"), manifest_json("contrast", ctx.cfg, ctx.inputs, ctx.catalog, stats));
  write_file(ctx.path("pages.csv"), pages_csv(pair, ctx.catalog));
  write_file(ctx.path("decisions.csv"), decisions_csv(pair, ctx.catalog));
  write_file(ctx.path("log.csv"), log_csv(pair, ctx.catalog));
  write_file(ctx.path("profiles.csv"), profiles_csv(pair.base_profiles, ctx.catalog));
  write_json(ctx.path("bep_report.json"), bep_report_json(report));

  std::string rounds;
  for (std::size_t t = 0; t < report.per_round.size(); ++t) {
    if (t > 0) rounds += " ";
    rounds += format_double(report.per_round[t]);
  }
  ctx.say("bep overall=" + format_double(report.overall));
  ctx.say("bep per_round=" + rounds);
  if (decider.llm) {
    ctx.say("llm fallbacks=" + std::to_string(decider.llm->fallbacks()) + " parse_drops=" +
            std::to_string(decider.llm->parse_drops()));
  }
  ctx.say("wrote " + ctx.out_dir.string() + "/{manifest.json,pages.csv,decisions.csv,log.csv,profiles.csv,bep_report.json}");
  return 0;
}

// evaluate: leave-one-out ranking accuracy of the configured recommender.
inline int cmd_evaluate(const CliOverrides& opt) {
  CommandContext ctx = load_context(opt, true);
  AccuracyReport report = evaluate_accuracy(ctx.cfg.sim.recommender, ctx.raw, ctx.catalog, ctx.cfg.eval_k);
  write_json(ctx.path("accuracy_report.json"), accuracy_report_json(report));
  for (int k : ctx.cfg.eval_k) {
    ctx.say("hr@" + std::to_string(k) + "=" + format_double(report.hr.at(k)) + " ndcg@" + std::to_string(k) +
            "=" + format_double(report.ndcg.at(k)));
  }
  ctx.say("map=" + format_double(report.map) + " excluded_users=" + std::to_string(report.excluded_users));
  ctx.say("wrote " + ctx.path("accuracy_report.json"));
  return 0;
}

// sweep: accuracy/diversity trade-off across randomization fractions.
// Decisions stay rule-based here regardless of llm_enabled; a sweep repeats
// the whole contrast once per fraction.
inline int cmd_sweep(const CliOverrides& opt) {
  CommandContext ctx = load_context(opt, true);
  std::vector<SweepPoint> points;
  for (double fraction : ctx.cfg.sweep_fractions) {
    SimulationConfig sim = ctx.cfg.sim;
    sim.randomize_fraction = fraction;
    ContrastPair pair = run_contrastive(sim, ctx.catalog, ctx.raw, nullptr);
    BepReport report = bep(pair, ctx.catalog);
    WrappedAccuracy acc =
        evaluate_wrapped_accuracy(ctx.cfg.sim.recommender, ctx.raw, ctx.catalog, 20, fraction,
                                  mix_seed({ctx.cfg.sim.master_seed, kSeedEval}));
    points.push_back(SweepPoint{fraction, acc.hr, acc.ndcg, report.overall});
    ctx.say("fraction=" + format_double(fraction) + " hr@20=" + format_double(acc.hr) + " ndcg@20=" +
            format_double(acc.ndcg) + " bep=" + format_double(report.overall));
  }
  write_file(ctx.path("sweep.csv"), sweep_csv(points));

  SvgSeries series;
  series.label = "fraction sweep";
  series.color = "#4878a8";
  series.draw_line = false;
  for (const SweepPoint& p : points) {
    series.points.emplace_back(p.hr20, p.bep);
    series.point_labels.push_back("f=" + format_double(p.fraction));
  }
  write_file(ctx.path("sweep.svg"), chart_svg("accuracy vs escape potential", "hr@20", "bep", {series}));
  ctx.say("wrote " + ctx.out_dir.string() + "/{sweep.csv,sweep.svg}");
  return 0;
}

// groups: per-trait and per-genre aggregation of an existing contrast run.
inline int cmd_groups(const CliOverrides& opt) {
  CommandContext ctx = load_context(opt, false);
  std::string report_path = ctx.path("bep_report.json");
  std::string profiles_path = ctx.path("profiles.csv");
  if (!std::filesystem::exists(report_path) || !std::filesystem::exists(profiles_path)) {
    throw ValidationError("groups needs bep_report.json and profiles.csv in " + ctx.out_dir.string() +
                          "; run contrast first");
  }
  std::map<UserId, double> per_user = read_per_user_bep(report_path);
  std::vector<ProfileRow> profiles = read_profiles_csv(profiles_path);

  std::map<std::string, std::map<std::string, std::pair<int, double>>> acc;
  for (const ProfileRow& row : profiles) {
    auto it = per_user.find(row.user);
    if (it == per_user.end()) continue;
    auto add = [&](const char* grouping, const std::string& level) {
      auto& slot = acc[grouping][level];
      slot.first += 1;
      slot.second += it->second;
    };
    add("activity", row.activity);
    add("conformity", row.conformity);
    add("diversity", row.diversity);
    add("genre", row.top_category);
  }
  std::map<std::string, std::map<std::string, GroupStat>> groups;
  for (const auto& [grouping, levels] : acc) {
    for (const auto& [level, slot] : levels) {
      groups[grouping][level] = GroupStat{slot.first, slot.second / static_cast<double>(slot.first)};
    }
  }
  write_file(ctx.path("groups.csv"), groups_csv(groups));
  for (const auto& [grouping, levels] : groups) {
    std::vector<std::pair<std::string, double>> bars;
    if (grouping == "genre") {
      for (const auto& [level, stat] : levels) bars.emplace_back(level, stat.mean_bep);
    } else {
      for (const char* level : {"low", "mid", "high"}) {
        auto it = levels.find(level);
        if (it != levels.end()) bars.emplace_back(level, it->second.mean_bep);
      }
    }
    write_file(ctx.path("groups_" + grouping + ".svg"),
               bar_chart_svg("mean bep by " + grouping, "mean bep", bars));
    std::string line = grouping + ":";
    for (const auto& [level, value] : bars) line += " " + level + "=" + format_double(value);
    ctx.say(line);
  }
  ctx.say("wrote " + ctx.out_dir.string() + "/{groups.csv,groups_*.svg}");
  return 0;
}

// report: round-by-round trends, baseline diversity metrics, and the rating
// distribution shift of an existing contrast run.
inline int cmd_report(const CliOverrides& opt) {
  CommandContext ctx = load_context(opt, true);
  std::string pages_path = ctx.path("pages.csv");
  std::string decisions_path = ctx.path("decisions.csv");
  if (!std::filesystem::exists(pages_path) || !std::filesystem::exists(decisions_path)) {
    throw ValidationError("report needs pages.csv and decisions.csv in " + ctx.out_dir.string() +
                          "; run contrast first");
  }
  PagesTable pages = read_pages_csv(pages_path, ctx.catalog);
  std::vector<DecisionRow> decisions = read_decisions_csv(decisions_path);

  std::vector<TrendPoint> trend;
  std::string baselines = "arm,round,mean_entropy,mean_coverage,mean_top_share\n";
  for (const char* arm : {"positive", "negative"}) {
    auto arm_it = pages.by_arm_round.find(arm);
    if (arm_it == pages.by_arm_round.end()) continue;
    for (const auto& [round, round_pages] : arm_it->second) {
      double div = 0, ent = 0, cov = 0, top = 0;
      for (const RankedPage& page : round_pages) {
        div += page_diversity(page, ctx.catalog);
        ent += standardized_entropy(page, ctx.catalog);
        cov += category_coverage(page, ctx.catalog);
        top += top_category_share(page, ctx.catalog);
      }
      double n = static_cast<double>(round_pages.size());
      trend.push_back(TrendPoint{round, arm, div / n});
      baselines += csv_row({arm, std::to_string(round), format_double(ent / n), format_double(cov / n),
                            format_double(top / n)});
    }
  }
  write_file(ctx.path("trend.csv"), trend_csv(trend));
  write_file(ctx.path("baselines.csv"), baselines);

  std::map<std::string, SvgSeries> series;
  series["positive"].color = "#2a7d50";
  series["negative"].color = "#b03434";
  for (const TrendPoint& p : trend) {
    series[p.arm].label = p.arm;
    series[p.arm].points.emplace_back(static_cast<double>(p.round), p.mean_diversity);
  }
  std::vector<SvgSeries> all_series;
  for (auto& [arm, s] : series) {
    if (!s.points.empty()) all_series.push_back(std::move(s));
  }
  write_file(ctx.path("trend.svg"), chart_svg("mean page diversity per round", "round", "distinct categories",
                                              all_series));

  // Rating histograms: the cold-start data versus each arm's decisions.
  auto bin_of = [](double rating) {
    long long b = round_half_up(rating);
    if (b < 1) b = 1;
    if (b > 5) b = 5;
    return static_cast<std::size_t>(b - 1);
  };
  std::vector<long long> cold(5, 0);
  for (const RawInteraction& r : ctx.raw) ++cold[bin_of(r.rating)];
  std::map<std::string, std::vector<long long>> sim;
  for (const DecisionRow& d : decisions) {
    auto [it, inserted] = sim.emplace(d.arm, std::vector<long long>(5, 0));
    ++it->second[bin_of(d.rating)];
  }
  std::string rating_csv = "source,rating,count,share\n";
  auto emit_hist = [&rating_csv](const std::string& source, const std::vector<long long>& counts) {
    long long total = 0;
    for (long long c : counts) total += c;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      double share = total > 0 ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
      rating_csv += csv_row({source, std::to_string(i + 1), std::to_string(counts[i]), format_double(share)});
    }
  };
  emit_hist("cold", cold);
  for (const auto& [arm, counts] : sim) emit_hist(arm, counts);
  write_file(ctx.path("rating_comparison.csv"), rating_csv);
  for (const auto& [arm, counts] : sim) {
    ctx.say("kl(" + arm + "||cold)=" + format_double(kl_divergence(counts, cold)));
  }
  ctx.say("wrote " + ctx.out_dir.string() +
          "/{trend.csv,trend.svg,baselines.csv,rating_comparison.csv}");
  return 0;
}

}  // namespace bubblesim
