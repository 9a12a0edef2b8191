#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bubblesim/agents.hpp"
#include "bubblesim/catalog.hpp"
#include "bubblesim/csv.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/recommenders.hpp"
#include "bubblesim/strutil.hpp"

namespace bubblesim {

// Prompt skeletons per policy kind. "{persona}" and "{page}" are filled per
// user-round; "[item]" is replaced by the configured item noun last, so the
// skeleton text itself may use it.
struct PromptTemplates {
  std::map<PolicyKind, std::string> by_kind;

  static PromptTemplates builtin() {
    static const char* kHeader =
        "{persona}\n"
        "\n"
        "Here is your current recommendation page:\n"
        "{page}\n"
        "\n";
    static const char* kFooter =
        "\n"
        "\n"
        "Reply with a single JSON object of the form "
        "{\"chosen\": [{\"item_id\": <id from the list>, \"rating\": <integer from 1 to 5>}, ...]} "
        "and nothing else. Only pick item_id values that appear in the list above.\n";

    PromptTemplates t;
    t.by_kind[PolicyKind::kPositive] =
        std::string(kHeader) +
        "You will actively broaden your [item] horizons. You will actively watch [item] that do not match "
        "your [item] tastes. Specifically, when you see the recommended list, while you are watching [item] "
        "that align with your tastes, you will also watch a few [item] that do not match your tastes." +
        kFooter;
    t.by_kind[PolicyKind::kWeaklyPositive] =
        std::string(kHeader) +
        "You will occasionally broaden your [item] horizons. You are open to watching [item] that do not "
        "match your [item] tastes. Specifically, when you see the recommended list, while you are watching "
        "[item] that align with your tastes, you may also watch one or two [item] that do not match your "
        "tastes." +
        kFooter;
    t.by_kind[PolicyKind::kNegative] =
        std::string(kHeader) +
        "You rely heavily on the recommendation system. You believe that [item] recommended by the "
        "recommendation system will match your own [item] tastes. Specifically, when you see the recommended "
        "list, you will watch a few top-ranked [item] first, and then watch other [item] based solely on "
        "your own taste." +
        kFooter;
    t.by_kind[PolicyKind::kWeaklyNegative] =
        std::string(kHeader) +
        "You mostly rely on the recommendation system. You believe that [item] recommended by the "
        "recommendation system will usually match your own [item] tastes. Specifically, when you see the "
        "recommended list, you will watch a top-ranked [item] first, and then watch other [item] based "
        "mostly on your own taste." +
        kFooter;
    return t;
  }

  // Overrides builtin skeletons with <kind>.txt files found in `dir`.
  static PromptTemplates load_dir(const std::string& dir) {
    PromptTemplates t = builtin();
    for (auto kind : {PolicyKind::kPositive, PolicyKind::kWeaklyPositive, PolicyKind::kNegative,
                      PolicyKind::kWeaklyNegative}) {
      std::filesystem::path path = std::filesystem::path(dir) / (std::string(to_string(kind)) + ".txt");
      if (std::filesystem::exists(path)) t.by_kind[kind] = read_file(path.string());
    }
    return t;
  }
};

namespace detail {

inline std::string taste_summary(const UserProfile& profile, const Catalog& catalog) {
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [cat, w] : profile.taste_weights) ranked.emplace_back(w, catalog.category_name(cat));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (ranked.empty()) return "no recorded history";
  std::string out;
  for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
    if (i > 0) out += ", ";
    out += ranked[i].second + " (" + std::to_string(round_half_up(ranked[i].first * 100.0)) + "%)";
  }
  return out;
}

inline std::string persona_block(const UserProfile& profile, const Catalog& catalog) {
  std::string out = "You are simulating a user of a service that recommends [item].\n";
  out += std::string("Your activity level is ") + to_string(profile.activity) + ", your conformity level is " +
         to_string(profile.conformity) + ", and your diversity level is " + to_string(profile.diversity) + ".\n";
  out += "Your tastes: " + taste_summary(profile, catalog) + ".";
  return out;
}

inline std::string page_block(const RankedPage& page, const Catalog& catalog) {
  std::string out;
  for (std::size_t i = 0; i < page.items.size(); ++i) {
    const Item& item = catalog.item(page.items[i]);
    out += std::to_string(i + 1) + ". item_id=" + std::to_string(item.id) + " \"" + item.title + "\" [" +
           catalog.category_name(item.categories.front()) + "]";
    if (i + 1 < page.items.size()) out += "\n";
  }
  return out;
}

}  // namespace detail

inline std::string render_prompt(const PromptTemplates& templates, const UserProfile& profile, PolicyKind kind,
                                 const RankedPage& page, const Catalog& catalog, const std::string& item_noun) {
  auto it = templates.by_kind.find(kind);
  if (it == templates.by_kind.end()) {
    throw ValidationError(std::string("no prompt template for policy kind '") + to_string(kind) + "'");
  }
  std::string out = it->second;
  out = replace_all(std::move(out), "{persona}", detail::persona_block(profile, catalog));
  out = replace_all(std::move(out), "{page}", detail::page_block(page, catalog));
  out = replace_all(std::move(out), "[item]", item_noun);
  return out;
}

struct ParsedLlmDecision {
  AgentDecision decision;
  int dropped = 0;  // entries rejected by validation
};

namespace detail {

// First parseable {...} block. Candidate blocks are found by a string-aware
// balance scan from each '{'; surrounding prose (even with stray quotes or
// braces) is skipped because bad candidates fail validation and the scan
// moves on to the next start.
inline std::string first_json_object(std::string_view text) {
  for (std::size_t from = 0; from < text.size(); ++from) {
    if (text[from] != '{') continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = from; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        std::string candidate(text.substr(from, i - from + 1));
        if (nlohmann::json::accept(candidate)) return candidate;
        break;
      }
    }
  }
  throw LlmError("no JSON object found in model reply");
}

}  // namespace detail

// Validates a model reply against the page it was shown: unknown item ids,
// repeated picks, and out-of-range or fractional ratings are dropped (and
// counted); an empty result after validation is an error.
inline ParsedLlmDecision parse_llm_decision(const std::string& reply, const RankedPage& page,
                                            const Catalog& catalog) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::first_json_object(reply));
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(std::string("model reply is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("chosen") || !doc["chosen"].is_array()) {
    throw LlmError("model reply lacks a \"chosen\" array");
  }

  std::map<ItemId, ItemIndex> on_page;
  for (ItemIndex idx : page.items) on_page.emplace(catalog.item(idx).id, idx);

  ParsedLlmDecision out;
  out.decision.user = page.user;
  out.decision.round = page.round;
  out.decision.provenance = AgentDecision::Provenance::kLlm;
  std::set<ItemIndex> taken;
  for (const auto& entry : doc["chosen"]) {
    if (!entry.is_object() || !entry.contains("item_id") || !entry.contains("rating") ||
        !entry["item_id"].is_number_integer() || !entry["rating"].is_number_integer()) {
      ++out.dropped;
      continue;
    }
    auto item_id = entry["item_id"].get<std::int64_t>();
    auto rating = entry["rating"].get<std::int64_t>();
    auto it = on_page.find(item_id);
    if (it == on_page.end() || rating < 1 || rating > 5 || !taken.insert(it->second).second) {
      ++out.dropped;
      continue;
    }
    out.decision.chosen.emplace_back(it->second, static_cast<double>(rating));
  }
  if (out.decision.chosen.empty()) throw LlmError("model reply chose no valid items");
  return out;
}

}  // namespace bubblesim
