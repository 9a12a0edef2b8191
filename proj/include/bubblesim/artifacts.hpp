#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bubblesim/accuracy.hpp"
#include "bubblesim/catalog.hpp"
#include "bubblesim/config.hpp"
#include "bubblesim/csv.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/metrics.hpp"
#include "bubblesim/sha1.hpp"
#include "bubblesim/simulation.hpp"
#include "bubblesim/strutil.hpp"

namespace bubblesim {

// All writers below produce byte-stable text: rows follow fixed iteration
// orders (arm, then round, then cohort position) and floats go through
// format_double.

inline std::string pages_csv(const ContrastPair& pair, const Catalog& catalog) {
  std::string out = "arm,user_id,round,rank,item_id,score\n";
  for (const RunRecord* run : {&pair.positive, &pair.negative}) {
    for (const RoundRecord& round : run->rounds) {
      for (const RankedPage& page : round.pages) {
        for (std::size_t rank = 0; rank < page.items.size(); ++rank) {
          out += csv_row({run->arm, std::to_string(page.user), std::to_string(round.round),
                          std::to_string(rank + 1), std::to_string(catalog.item(page.items[rank]).id),
                          format_double(page.scores[rank])});
        }
      }
    }
  }
  return out;
}

inline std::string decisions_csv(const ContrastPair& pair, const Catalog& catalog) {
  std::string out = "arm,user_id,round,item_id,rating\n";
  for (const RunRecord* run : {&pair.positive, &pair.negative}) {
    for (const RoundRecord& round : run->rounds) {
      for (const AgentDecision& d : round.decisions) {
        for (const auto& [item, rating] : d.chosen) {
          out += csv_row({run->arm, std::to_string(d.user), std::to_string(round.round),
                          std::to_string(catalog.item(item).id), format_double(rating)});
        }
      }
    }
  }
  return out;
}

inline std::string log_csv(const ContrastPair& pair, const Catalog& catalog) {
  std::string out = "arm,user_id,item_id,rating,round\n";
  for (const RunRecord* run : {&pair.positive, &pair.negative}) {
    for (const LogEntry& e : run->final_log.entries()) {
      out += csv_row({run->arm, std::to_string(e.user), std::to_string(catalog.item(e.item).id),
                      format_double(e.rating), std::to_string(e.round)});
    }
  }
  return out;
}

inline std::string profiles_csv(const std::map<UserId, UserProfile>& profiles, const Catalog& catalog) {
  std::string out = "user_id,activity,conformity,diversity,top_category\n";
  for (const auto& [user, p] : profiles) {
    out += csv_row({std::to_string(user), to_string(p.activity), to_string(p.conformity), to_string(p.diversity),
                    dominant_category(p, catalog)});
  }
  return out;
}

inline nlohmann::json bep_report_json(const BepReport& report) {
  nlohmann::json j;
  j["overall"] = report.overall;
  j["per_round"] = report.per_round;
  nlohmann::json per_user = nlohmann::json::object();
  for (const auto& [user, value] : report.per_user) per_user[std::to_string(user)] = value;
  j["per_user"] = std::move(per_user);
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [grouping, levels] : report.groups) {
    nlohmann::json g = nlohmann::json::object();
    for (const auto& [level, stat] : levels) {
      g[level] = {{"users", stat.users}, {"mean_bep", stat.mean_bep}};
    }
    groups[grouping] = std::move(g);
  }
  j["groups"] = std::move(groups);
  return j;
}

inline nlohmann::json accuracy_report_json(const AccuracyReport& report) {
  nlohmann::json j;
  nlohmann::json hr = nlohmann::json::object(), ndcg = nlohmann::json::object();
  for (const auto& [k, v] : report.hr) hr[std::to_string(k)] = v;
  for (const auto& [k, v] : report.ndcg) ndcg[std::to_string(k)] = v;
  j["hr"] = std::move(hr);
  j["ndcg"] = std::move(ndcg);
  j["map"] = report.map;
  j["excluded_users"] = report.excluded_users;
  return j;
}

struct SweepPoint {
  double fraction = 0.0;
  double hr20 = 0.0;
  double ndcg20 = 0.0;
  double bep = 0.0;
};

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "fraction,hr@20,ndcg@20,bep\n";
  for (const SweepPoint& p : points) {
    out += csv_row({format_double(p.fraction), format_double(p.hr20), format_double(p.ndcg20),
                    format_double(p.bep)});
  }
  return out;
}

inline std::string trend_csv(const std::vector<TrendPoint>& points) {
  std::string out = "round,arm,mean_diversity\n";
  for (const TrendPoint& p : points) {
    out += csv_row({std::to_string(p.round), p.arm, format_double(p.mean_diversity)});
  }
  return out;
}

inline std::string groups_csv(const std::map<std::string, std::map<std::string, GroupStat>>& groups) {
  std::string out = "grouping,level,users,mean_bep\n";
  for (const auto& [grouping, levels] : groups) {
    for (const auto& [level, stat] : levels) {
      out += csv_row({grouping, level, std::to_string(stat.users), format_double(stat.mean_bep)});
    }
  }
  return out;
}

struct RunInputs {
  std::string interactions_path;
  std::string items_path;
  std::string interactions_sha1;
  std::string items_sha1;
};

inline RunInputs hash_inputs(const DatasetConfig& dataset) {
  RunInputs in;
  in.interactions_path = dataset.interactions;
  in.items_path = dataset.items;
  in.interactions_sha1 = sha1_file(dataset.interactions);
  in.items_sha1 = sha1_file(dataset.items);
  return in;
}

inline nlohmann::json manifest_json(const std::string& command, const RunConfig& cfg, const RunInputs& inputs,
                                    const Catalog& catalog, const nlohmann::json& stats) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config_to_json(cfg);
  j["inputs"] = {{"interactions", {{"path", inputs.interactions_path}, {"sha1", inputs.interactions_sha1}}},
                 {"items", {{"path", inputs.items_path}, {"sha1", inputs.items_sha1}}}};
  j["catalog"] = {{"items", catalog.num_items()}, {"categories", catalog.num_categories()}};
  j["stats"] = stats;
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Read-back of artifacts for the commands that post-process an existing run.
// ---------------------------------------------------------------------------

struct PagesTable {
  // arm -> round -> pages in file order (cohort order when written here)
  std::map<std::string, std::map<int, std::vector<RankedPage>>> by_arm_round;
};

inline PagesTable read_pages_csv(const std::string& path, const Catalog& catalog) {
  std::string text = read_file(path);
  std::size_t pos = 0;
  std::vector<std::string> fields;
  if (!csv_next_record(text, pos, fields) || csv_row(fields) != "arm,user_id,round,rank,item_id,score\n") {
    throw ParseError(path + ": not a pages table");
  }
  PagesTable table;
  RankedPage* current = nullptr;
  std::string current_arm;
  std::size_t row = 1;
  while (csv_next_record(text, pos, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 6) throw ParseError(path + ":" + std::to_string(row) + ": expected 6 fields");
    UserId user = parse_int(fields[1], "user_id");
    int round = static_cast<int>(parse_int(fields[2], "round"));
    int rank = static_cast<int>(parse_int(fields[3], "rank"));
    auto& pages = table.by_arm_round[fields[0]][round];
    if (rank == 1) {
      pages.emplace_back();
      current = &pages.back();
      current->user = user;
      current->round = round;
      current_arm = fields[0];
    }
    if (current == nullptr || current->user != user || current->round != round || current_arm != fields[0] ||
        static_cast<std::size_t>(rank) != current->items.size() + 1) {
      throw ParseError(path + ":" + std::to_string(row) + ": ranks out of order");
    }
    current->items.push_back(catalog.require_index(parse_int(fields[4], "item_id")));
    current->scores.push_back(parse_double(fields[5], "score"));
  }
  if (table.by_arm_round.empty()) throw ParseError(path + ": no page rows");
  return table;
}

struct DecisionRow {
  std::string arm;
  UserId user = 0;
  int round = 0;
  ItemId item = 0;
  double rating = 0.0;
};

inline std::vector<DecisionRow> read_decisions_csv(const std::string& path) {
  std::string text = read_file(path);
  std::size_t pos = 0;
  std::vector<std::string> fields;
  if (!csv_next_record(text, pos, fields) || csv_row(fields) != "arm,user_id,round,item_id,rating\n") {
    throw ParseError(path + ": not a decisions table");
  }
  std::vector<DecisionRow> rows;
  std::size_t row = 1;
  while (csv_next_record(text, pos, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 5) throw ParseError(path + ":" + std::to_string(row) + ": expected 5 fields");
    DecisionRow r;
    r.arm = fields[0];
    r.user = parse_int(fields[1], "user_id");
    r.round = static_cast<int>(parse_int(fields[2], "round"));
    r.item = parse_int(fields[3], "item_id");
    r.rating = parse_double(fields[4], "rating");
    rows.push_back(std::move(r));
  }
  return rows;
}

struct ProfileRow {
  UserId user = 0;
  std::string activity, conformity, diversity, top_category;
};

inline std::vector<ProfileRow> read_profiles_csv(const std::string& path) {
  std::string text = read_file(path);
  std::size_t pos = 0;
  std::vector<std::string> fields;
  if (!csv_next_record(text, pos, fields) || csv_row(fields) != "user_id,activity,conformity,diversity,top_category\n") {
    throw ParseError(path + ": not a profiles table");
  }
  std::vector<ProfileRow> rows;
  std::size_t row = 1;
  while (csv_next_record(text, pos, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 5) throw ParseError(path + ":" + std::to_string(row) + ": expected 5 fields");
    rows.push_back(ProfileRow{parse_int(fields[0], "user_id"), fields[1], fields[2], fields[3], fields[4]});
  }
  return rows;
}

inline std::map<UserId, double> read_per_user_bep(const std::string& report_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(report_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(report_path + ": " + e.what());
  }
  if (!j.contains("per_user") || !j["per_user"].is_object()) {
    throw ParseError(report_path + ": missing per_user block");
  }
  std::map<UserId, double> out;
  for (const auto& [key, value] : j["per_user"].items()) {
    out[parse_int(key, "user_id")] = value.get<double>();
  }
  return out;
}

}  // namespace bubblesim
