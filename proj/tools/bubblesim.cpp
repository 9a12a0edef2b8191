// Command line front end. All real work lives in bubblesim/commands.hpp so
// it stays testable without spawning processes.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bubblesim/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"contrastive filter-bubble simulation over a recommender loop"};
  app.require_subcommand(1);

  bubblesim::CliOverrides opt;
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  app.add_option("--config", opt.config_path, "run configuration (TOML)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed_value, "override master_seed and recommender seed");
  app.add_option("--out", opt.out, "override output_dir");
  app.add_flag("--llm", opt.llm, "drive decisions through the configured LLM endpoint");
  app.add_flag("--quiet", opt.quiet, "suppress progress output");

  bool emit_defaults = false;
  auto* ingest = app.add_subcommand("ingest", "validate a dataset and write a canonical snapshot");
  ingest->add_flag("--emit-defaults", emit_defaults, "write config_reference.toml with every default");
  auto* contrast = app.add_subcommand("contrast", "run the paired positive/negative simulation");
  auto* sweep = app.add_subcommand("sweep", "contrast + accuracy across randomization fractions");
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-out ranking accuracy");
  auto* groups = app.add_subcommand("groups", "aggregate an existing run by user traits");
  auto* report = app.add_subcommand("report", "trends and baseline metrics for an existing run");
  // Global options may appear after the subcommand name.
  for (auto* sub : {ingest, contrast, sweep, evaluate, groups, report}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  seed_given = seed_opt->count() > 0;
  if (seed_given) opt.seed = seed_value;

  try {
    if (ingest->parsed()) return bubblesim::cmd_ingest(opt, emit_defaults);
    if (contrast->parsed()) return bubblesim::cmd_contrast(opt);
    if (sweep->parsed()) return bubblesim::cmd_sweep(opt);
    if (evaluate->parsed()) return bubblesim::cmd_evaluate(opt);
    if (groups->parsed()) return bubblesim::cmd_groups(opt);
    if (report->parsed()) return bubblesim::cmd_report(opt);
  } catch (const bubblesim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
