#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bubblesim/agents.hpp"
#include "bubblesim/csv.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/llm.hpp"
#include "bubblesim/simulation.hpp"
#include "bubblesim/toml.hpp"

namespace bubblesim {

struct DatasetConfig {
  std::string format = "csv";  // "csv" or "movielens"
  std::string interactions;    // ratings.dat for movielens
  std::string items;           // movies.dat for movielens
  std::string item_noun = "items";
};

struct RunConfig {
  std::string output_dir = "out";
  DatasetConfig dataset;
  SimulationConfig sim;
  std::string positive_arm = "positive";  // policy kind driving each arm
  std::string negative_arm = "negative";
  std::vector<int> eval_k{10, 20};
  std::vector<double> sweep_fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  LlmConfig llm;
  bool llm_enabled = false;
};

namespace detail {

inline int checked_int(std::int64_t v, const char* what, std::int64_t lo, std::int64_t hi) {
  if (v < lo || v > hi) {
    throw ValidationError(std::string(what) + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "], got " + std::to_string(v));
  }
  return static_cast<int>(v);
}

inline BehaviorPolicy policy_from_config(PolicyKind kind, TomlCursor& c) {
  BehaviorPolicy p = BehaviorPolicy::make(kind);
  p.taste_threshold = c.get_double("policies", "taste_threshold", p.taste_threshold);
  p.conformity_alpha[0] = c.get_double("policies", "conformity_alpha_low", p.conformity_alpha[0]);
  p.conformity_alpha[1] = c.get_double("policies", "conformity_alpha_mid", p.conformity_alpha[1]);
  p.conformity_alpha[2] = c.get_double("policies", "conformity_alpha_high", p.conformity_alpha[2]);
  auto quota = [&](const char* key, int fallback) {
    return checked_int(c.get_int("policies", key, fallback), key, 0, 1000);
  };
  switch (kind) {
    case PolicyKind::kPositive:
      p.n_match = quota("positive_n_match", p.n_match);
      p.n_explore = quota("positive_n_explore", p.n_explore);
      break;
    case PolicyKind::kWeaklyPositive:
      p.n_match = quota("weakly_positive_n_match", p.n_match);
      p.n_explore = quota("weakly_positive_n_explore", p.n_explore);
      break;
    case PolicyKind::kNegative:
      p.n_top = quota("negative_n_top", p.n_top);
      p.n_match = quota("negative_n_match", p.n_match);
      break;
    case PolicyKind::kWeaklyNegative:
      p.n_top = quota("weakly_negative_n_top", p.n_top);
      p.n_match = quota("weakly_negative_n_match", p.n_match);
      break;
    case PolicyKind::kCustom:
      throw ValidationError("arms must name one of: positive, weakly_positive, negative, weakly_negative");
  }
  if (p.taste_threshold < 0.0 || p.taste_threshold > 1.0) {
    throw ValidationError("taste_threshold must be in [0, 1]");
  }
  for (double a : p.conformity_alpha) {
    if (a < 0.0 || a > 1.0) throw ValidationError("conformity_alpha values must be in [0, 1]");
  }
  if (p.base_total() <= 0) throw ValidationError("policy '" + std::string(to_string(kind)) + "' picks nothing");
  return p;
}

}  // namespace detail

// Strict parse: unknown sections or keys are errors, as are values of the
// wrong type. Every knob has a default, so "" is a valid config text.
inline RunConfig parse_run_config(const std::string& text, const std::string& origin = "config") {
  TomlCursor c(TomlDoc::parse(text, origin));
  RunConfig cfg;

  cfg.output_dir = c.get_string("", "output_dir", cfg.output_dir);

  cfg.dataset.format = c.get_string("dataset", "format", cfg.dataset.format);
  if (cfg.dataset.format != "csv" && cfg.dataset.format != "movielens") {
    throw ValidationError("dataset.format must be \"csv\" or \"movielens\"");
  }
  cfg.dataset.interactions = c.get_string("dataset", "interactions", cfg.dataset.interactions);
  cfg.dataset.items = c.get_string("dataset", "items", cfg.dataset.items);
  cfg.dataset.item_noun = c.get_string("dataset", "item_noun", cfg.dataset.item_noun);

  cfg.sim.rounds = detail::checked_int(c.get_int("simulation", "rounds", cfg.sim.rounds), "rounds", 1, 100000);
  cfg.sim.page_size =
      detail::checked_int(c.get_int("simulation", "page_size", cfg.sim.page_size), "page_size", 1, 100000);
  cfg.sim.frequent_pool = detail::checked_int(c.get_int("simulation", "frequent_pool", cfg.sim.frequent_pool),
                                              "frequent_pool", 1, 100000000);
  cfg.sim.sample_size = detail::checked_int(c.get_int("simulation", "sample_size", cfg.sim.sample_size),
                                            "sample_size", 1, 100000000);
  cfg.sim.randomize_fraction = c.get_double("simulation", "randomize_fraction", cfg.sim.randomize_fraction);
  std::int64_t seed = c.get_int("simulation", "master_seed", static_cast<std::int64_t>(cfg.sim.master_seed));
  if (seed < 0) throw ValidationError("master_seed must be >= 0");
  cfg.sim.master_seed = static_cast<std::uint64_t>(seed);
  cfg.llm_enabled = c.get_bool("simulation", "llm_enabled", cfg.llm_enabled);

  RecommenderSpec& rec = cfg.sim.recommender;
  rec.kind = recommender_kind_from(c.get_string("recommender", "kind", to_string(rec.kind)));
  rec.latent_dim =
      detail::checked_int(c.get_int("recommender", "latent_dim", rec.latent_dim), "latent_dim", 1, 4096);
  rec.learning_rate = c.get_double("recommender", "learning_rate", rec.learning_rate);
  rec.regularization = c.get_double("recommender", "regularization", rec.regularization);
  rec.epochs = detail::checked_int(c.get_int("recommender", "epochs", rec.epochs), "epochs", 1, 100000);
  rec.neighbors = detail::checked_int(c.get_int("recommender", "neighbors", rec.neighbors), "neighbors", 1, 100000);
  rec.propagation_layers = detail::checked_int(
      c.get_int("recommender", "propagation_layers", rec.propagation_layers), "propagation_layers", 0, 64);
  std::int64_t rec_seed = c.get_int("recommender", "seed", seed);
  if (rec_seed < 0) throw ValidationError("recommender seed must be >= 0");
  rec.seed = static_cast<std::uint64_t>(rec_seed);
  if (rec.learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
  if (rec.regularization < 0.0) throw ValidationError("regularization must be >= 0");

  cfg.positive_arm = c.get_string("policies", "positive_arm", cfg.positive_arm);
  cfg.negative_arm = c.get_string("policies", "negative_arm", cfg.negative_arm);
  cfg.sim.positive_policy = detail::policy_from_config(policy_kind_from(cfg.positive_arm), c);
  cfg.sim.negative_policy = detail::policy_from_config(policy_kind_from(cfg.negative_arm), c);
  // Quota keys for kinds no arm uses must still be recognized.
  for (auto kind : {PolicyKind::kPositive, PolicyKind::kWeaklyPositive, PolicyKind::kNegative,
                    PolicyKind::kWeaklyNegative}) {
    (void)detail::policy_from_config(kind, c);
  }

  std::vector<std::int64_t> ks;
  for (int k : cfg.eval_k) ks.push_back(k);
  ks = c.get_int_array("evaluate", "k_values", ks);
  cfg.eval_k.clear();
  for (std::int64_t k : ks) cfg.eval_k.push_back(detail::checked_int(k, "k_values entry", 1, 1000000));
  if (cfg.eval_k.empty()) throw ValidationError("evaluate.k_values cannot be empty");

  cfg.sweep_fractions = c.get_double_array("sweep", "fractions", cfg.sweep_fractions);
  if (cfg.sweep_fractions.empty()) throw ValidationError("sweep.fractions cannot be empty");
  for (double f : cfg.sweep_fractions) {
    if (f < 0.0 || f > 1.0) throw ValidationError("sweep fractions must be in [0, 1]");
  }

  cfg.llm.endpoint_url = c.get_string("llm", "endpoint_url", cfg.llm.endpoint_url);
  cfg.llm.model_name = c.get_string("llm", "model_name", cfg.llm.model_name);
  cfg.llm.temperature = c.get_double("llm", "temperature", cfg.llm.temperature);
  cfg.llm.max_tokens = detail::checked_int(c.get_int("llm", "max_tokens", cfg.llm.max_tokens), "max_tokens", 1,
                                           1000000);
  cfg.llm.timeout_ms =
      detail::checked_int(c.get_int("llm", "timeout_ms", cfg.llm.timeout_ms), "timeout_ms", 1, 3600000);
  cfg.llm.max_retries =
      detail::checked_int(c.get_int("llm", "max_retries", cfg.llm.max_retries), "max_retries", 0, 100);
  cfg.llm.in_flight_limit = detail::checked_int(c.get_int("llm", "in_flight_limit", cfg.llm.in_flight_limit),
                                                "in_flight_limit", 1, 1024);
  cfg.llm.api_key_env_var = c.get_string("llm", "api_key_env_var", cfg.llm.api_key_env_var);
  cfg.llm.prompt_dir = c.get_string("llm", "prompt_dir", cfg.llm.prompt_dir);
  cfg.llm.item_noun = cfg.dataset.item_noun;
  cfg.llm.validate();

  c.finish();
  cfg.sim.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path), path);
}

// Reference config carrying every recognized key at its default value.
inline std::string default_config_text() {
  return R"(# Run configuration reference. Every key is optional; the values shown
# are the defaults. Unknown keys are rejected.

output_dir = "out"

[dataset]
format = "csv"            # "csv" or "movielens"
interactions = ""         # csv: user_id,item_id,rating,timestamp; movielens: ratings.dat
items = ""                # csv: item_id,title,categories; movielens: movies.dat
item_noun = "items"       # noun used when prompting simulated users

[simulation]
rounds = 8
page_size = 20
frequent_pool = 1000      # cold start keeps the most active users...
sample_size = 200         # ...and samples the simulated cohort from them
randomize_fraction = 0.0  # share of each page replaced by uniform draws
master_seed = 42
llm_enabled = false       # same as passing --llm

[recommender]
kind = "bpr_mf"           # random | popularity | item_knn | bpr_mf | graph_prop
latent_dim = 32
learning_rate = 0.05
regularization = 0.01
epochs = 30
neighbors = 50            # item_knn neighbor list size
propagation_layers = 2    # graph_prop walk length
seed = 42                 # defaults to master_seed

[policies]
positive_arm = "positive"         # positive | weakly_positive | negative | weakly_negative
negative_arm = "negative"
taste_threshold = 0.05
positive_n_match = 4
positive_n_explore = 2
weakly_positive_n_match = 4
weakly_positive_n_explore = 1
negative_n_top = 2
negative_n_match = 3
weakly_negative_n_top = 1
weakly_negative_n_match = 3
conformity_alpha_low = 0.2
conformity_alpha_mid = 0.5
conformity_alpha_high = 0.8

[evaluate]
k_values = [10, 20]

[sweep]
fractions = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]

[llm]
endpoint_url = ""         # e.g. "http://localhost:8000/v1/chat/completions"
model_name = ""
temperature = 0.0
max_tokens = 512
timeout_ms = 30000
max_retries = 3
in_flight_limit = 4       # reserved for future concurrent dispatch
api_key_env_var = "BUBBLESIM_API_KEY"
prompt_dir = ""           # optional directory of <policy_kind>.txt overrides
)";
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["output_dir"] = cfg.output_dir;
  j["dataset"] = {{"format", cfg.dataset.format},
                  {"interactions", cfg.dataset.interactions},
                  {"items", cfg.dataset.items},
                  {"item_noun", cfg.dataset.item_noun}};
  j["simulation"] = {{"rounds", cfg.sim.rounds},
                     {"page_size", cfg.sim.page_size},
                     {"frequent_pool", cfg.sim.frequent_pool},
                     {"sample_size", cfg.sim.sample_size},
                     {"randomize_fraction", cfg.sim.randomize_fraction},
                     {"master_seed", cfg.sim.master_seed},
                     {"llm_enabled", cfg.llm_enabled}};
  j["recommender"] = {{"kind", to_string(cfg.sim.recommender.kind)},
                      {"latent_dim", cfg.sim.recommender.latent_dim},
                      {"learning_rate", cfg.sim.recommender.learning_rate},
                      {"regularization", cfg.sim.recommender.regularization},
                      {"epochs", cfg.sim.recommender.epochs},
                      {"neighbors", cfg.sim.recommender.neighbors},
                      {"propagation_layers", cfg.sim.recommender.propagation_layers},
                      {"seed", cfg.sim.recommender.seed}};
  auto policy_json = [](const BehaviorPolicy& p) {
    return nlohmann::json{{"kind", to_string(p.kind)},
                          {"n_match", p.n_match},
                          {"n_explore", p.n_explore},
                          {"n_top", p.n_top},
                          {"taste_threshold", p.taste_threshold},
                          {"conformity_alpha", p.conformity_alpha}};
  };
  j["policies"] = {{"positive_arm", cfg.positive_arm},
                   {"negative_arm", cfg.negative_arm},
                   {"positive", policy_json(cfg.sim.positive_policy)},
                   {"negative", policy_json(cfg.sim.negative_policy)}};
  j["evaluate"] = {{"k_values", cfg.eval_k}};
  j["sweep"] = {{"fractions", cfg.sweep_fractions}};
  j["llm"] = {{"endpoint_url", cfg.llm.endpoint_url},
              {"model_name", cfg.llm.model_name},
              {"temperature", cfg.llm.temperature},
              {"max_tokens", cfg.llm.max_tokens},
              {"timeout_ms", cfg.llm.timeout_ms},
              {"max_retries", cfg.llm.max_retries},
              {"in_flight_limit", cfg.llm.in_flight_limit},
              {"api_key_env_var", cfg.llm.api_key_env_var},
              {"prompt_dir", cfg.llm.prompt_dir}};
  return j;
}

}  // namespace bubblesim
