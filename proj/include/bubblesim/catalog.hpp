#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bubblesim/csv.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/strutil.hpp"

namespace bubblesim {

using UserId = std::int64_t;
using ItemId = std::int64_t;
using CategoryId = std::int32_t;
using ItemIndex = std::int32_t;

// Per-item exclusion flags indexed by ItemIndex.
using ItemMask = std::vector<char>;

struct RawInteraction {
  UserId user = 0;
  ItemId item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

struct Item {
  ItemId id = 0;
  std::string title;
  std::vector<CategoryId> categories;  // first entry is the primary category
};

// Immutable item/category universe. Items are sorted by id and categories
// lexicographically, so identical input data yields an identical catalog
// regardless of file row order.
class Catalog {
 public:
  struct ItemSpec {
    ItemId id = 0;
    std::string title;
    std::vector<std::string> categories;
  };

  static Catalog build(std::vector<ItemSpec> specs) {
    Catalog c;
    std::set<std::string> names;
    std::set<ItemId> ids;
    for (const auto& s : specs) {
      if (!ids.insert(s.id).second) throw ValidationError("duplicate item_id " + std::to_string(s.id));
      if (s.categories.empty()) throw ValidationError("item " + std::to_string(s.id) + " has no categories");
      for (const auto& name : s.categories) {
        if (name.empty()) throw ValidationError("item " + std::to_string(s.id) + " has an empty category name");
        names.insert(name);
      }
    }
    c.categories_.assign(names.begin(), names.end());
    std::map<std::string_view, CategoryId> interned;
    for (std::size_t i = 0; i < c.categories_.size(); ++i) {
      interned[c.categories_[i]] = static_cast<CategoryId>(i);
    }
    std::sort(specs.begin(), specs.end(), [](const ItemSpec& a, const ItemSpec& b) { return a.id < b.id; });
    c.items_.reserve(specs.size());
    for (auto& s : specs) {
      Item item;
      item.id = s.id;
      item.title = std::move(s.title);
      item.categories.reserve(s.categories.size());
      for (const auto& name : s.categories) item.categories.push_back(interned.at(name));
      c.index_.emplace(item.id, static_cast<ItemIndex>(c.items_.size()));
      c.items_.push_back(std::move(item));
    }
    return c;
  }

  std::size_t num_items() const { return items_.size(); }
  std::size_t num_categories() const { return categories_.size(); }
  const std::vector<Item>& items() const { return items_; }
  const Item& item(ItemIndex idx) const { return items_.at(static_cast<std::size_t>(idx)); }
  const std::string& category_name(CategoryId id) const { return categories_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& category_names() const { return categories_; }

  CategoryId primary_category(ItemIndex idx) const { return item(idx).categories.front(); }

  std::optional<ItemIndex> try_index(ItemId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  ItemIndex require_index(ItemId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown item_id " + std::to_string(id));
    return it->second;
  }

 private:
  std::vector<Item> items_;
  std::vector<std::string> categories_;
  std::unordered_map<ItemId, ItemIndex> index_;
};

inline const std::string& category_of(const Catalog& catalog, ItemId id) {
  return catalog.category_name(catalog.primary_category(catalog.require_index(id)));
}

struct LogEntry {
  UserId user = 0;
  ItemIndex item = 0;
  double rating = 0.0;
  int round = 0;
};

// Append-only interaction store. One entry per (user, item) pair; append
// refuses repeats so merge logic can count dropped duplicates.
class InteractionLog {
 public:
  bool append(UserId user, ItemIndex item, double rating, int round) {
    if (!seen_.emplace(user, item).second) return false;
    by_user_[user].push_back(entries_.size());
    entries_.push_back(LogEntry{user, item, rating, round});
    if (round > last_round_) last_round_ = round;
    return true;
  }

  const std::vector<LogEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int last_round() const { return last_round_; }
  std::size_t user_count() const { return by_user_.size(); }

  bool contains(UserId user, ItemIndex item) const { return seen_.count({user, item}) != 0; }

  // Entry indices for one user, in append order; empty for unknown users.
  const std::vector<std::size_t>& entries_of(UserId user) const {
    static const std::vector<std::size_t> kEmpty;
    auto it = by_user_.find(user);
    return it == by_user_.end() ? kEmpty : it->second;
  }

  const std::map<UserId, std::vector<std::size_t>>& by_user() const { return by_user_; }

  ItemMask interacted_mask(UserId user, std::size_t num_items) const {
    ItemMask mask(num_items, 0);
    for (std::size_t idx : entries_of(user)) mask[static_cast<std::size_t>(entries_[idx].item)] = 1;
    return mask;
  }

 private:
  std::vector<LogEntry> entries_;
  std::map<UserId, std::vector<std::size_t>> by_user_;
  std::set<std::pair<UserId, ItemIndex>> seen_;
  int last_round_ = 0;
};

namespace detail {

inline void validate_interaction(const RawInteraction& r, const Catalog& catalog, std::size_t row) {
  if (!catalog.try_index(r.item)) {
    throw ValidationError("interaction row " + std::to_string(row) + " references unknown item_id " +
                          std::to_string(r.item));
  }
  if (r.rating < 1.0 || r.rating > 5.0) {
    throw ValidationError("interaction row " + std::to_string(row) + " has rating " + format_double(r.rating) +
                          " outside [1, 5]");
  }
}

}  // namespace detail

// Dedupes repeated (user, item) pairs keeping the row with the greatest
// (timestamp, rating), then sorts by (user, timestamp, item). Output order
// is therefore independent of input row order.
inline std::vector<RawInteraction> canonicalize_interactions(std::vector<RawInteraction> raw) {
  std::map<std::pair<UserId, ItemId>, RawInteraction> best;
  for (const auto& r : raw) {
    auto [it, inserted] = best.emplace(std::make_pair(r.user, r.item), r);
    if (!inserted) {
      const RawInteraction& old = it->second;
      if (std::make_pair(r.timestamp, r.rating) > std::make_pair(old.timestamp, old.rating)) it->second = r;
    }
  }
  std::vector<RawInteraction> out;
  out.reserve(best.size());
  for (auto& [key, r] : best) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const RawInteraction& a, const RawInteraction& b) {
    return std::tie(a.user, a.timestamp, a.item) < std::tie(b.user, b.timestamp, b.item);
  });
  return out;
}

// MovieLens ML-1M layout: movies.dat "MovieID::Title::Genre|Genre", and
// ratings.dat "UserID::MovieID::Rating::Timestamp". Bytes are passed through
// untouched (the original files are Latin-1).
inline std::pair<Catalog, std::vector<RawInteraction>> load_movielens(const std::string& ratings_path,
                                                                      const std::string& movies_path) {
  std::vector<Catalog::ItemSpec> specs;
  {
    std::string text = read_file(movies_path);
    std::size_t row = 0;
    for (std::string_view line : split(text, "\n")) {
      ++row;
      line = trim(line);
      if (line.empty()) continue;
      auto parts = split(line, "::");
      if (parts.size() != 3) throw ParseError(movies_path + ":" + std::to_string(row) + ": expected 3 '::' fields");
      Catalog::ItemSpec spec;
      spec.id = parse_int(trim(parts[0]), "item_id");
      spec.title = std::string(trim(parts[1]));
      for (auto g : split(parts[2], "|")) {
        auto name = trim(g);
        if (!name.empty()) spec.categories.emplace_back(name);
      }
      specs.push_back(std::move(spec));
    }
  }
  Catalog catalog = Catalog::build(std::move(specs));

  std::vector<RawInteraction> raw;
  {
    std::string text = read_file(ratings_path);
    std::size_t row = 0;
    for (std::string_view line : split(text, "\n")) {
      ++row;
      line = trim(line);
      if (line.empty()) continue;
      auto parts = split(line, "::");
      if (parts.size() != 4) throw ParseError(ratings_path + ":" + std::to_string(row) + ": expected 4 '::' fields");
      RawInteraction r;
      r.user = parse_int(trim(parts[0]), "user_id");
      r.item = parse_int(trim(parts[1]), "item_id");
      r.rating = parse_double(trim(parts[2]), "rating");
      r.timestamp = parse_int(trim(parts[3]), "timestamp");
      detail::validate_interaction(r, catalog, row);
      raw.push_back(r);
    }
  }
  return {std::move(catalog), canonicalize_interactions(std::move(raw))};
}

// Generic CSV layout: items "item_id,title,categories" (categories joined by
// '|') and interactions "user_id,item_id,rating,timestamp". Headers are
// mandatory and checked verbatim.
inline std::pair<Catalog, std::vector<RawInteraction>> load_generic_csv(const std::string& interactions_path,
                                                                        const std::string& items_path) {
  auto expect_header = [](const std::vector<std::string>& fields, std::string_view expected,
                          const std::string& path) {
    std::string joined;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) joined.push_back(',');
      joined += fields[i];
    }
    if (joined != expected) {
      throw ParseError(path + ": expected header '" + std::string(expected) + "', got '" + joined + "'");
    }
  };

  std::vector<Catalog::ItemSpec> specs;
  {
    std::string text = read_file(items_path);
    std::size_t pos = 0;
    std::vector<std::string> fields;
    if (!csv_next_record(text, pos, fields)) throw ParseError(items_path + ": empty file");
    expect_header(fields, "item_id,title,categories", items_path);
    std::size_t row = 1;
    while (csv_next_record(text, pos, fields)) {
      ++row;
      if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
      if (fields.size() != 3) {
        throw ParseError(items_path + ":" + std::to_string(row) + ": expected 3 fields, got " +
                         std::to_string(fields.size()));
      }
      Catalog::ItemSpec spec;
      spec.id = parse_int(trim(fields[0]), "item_id");
      spec.title = fields[1];
      for (auto g : split(fields[2], "|")) {
        auto name = trim(g);
        if (!name.empty()) spec.categories.emplace_back(name);
      }
      specs.push_back(std::move(spec));
    }
  }
  Catalog catalog = Catalog::build(std::move(specs));

  std::vector<RawInteraction> raw;
  {
    std::string text = read_file(interactions_path);
    std::size_t pos = 0;
    std::vector<std::string> fields;
    if (!csv_next_record(text, pos, fields)) throw ParseError(interactions_path + ": empty file");
    expect_header(fields, "user_id,item_id,rating,timestamp", interactions_path);
    std::size_t row = 1;
    while (csv_next_record(text, pos, fields)) {
      ++row;
      if (fields.size() == 1 && fields[0].empty()) continue;
      if (fields.size() != 4) {
        throw ParseError(interactions_path + ":" + std::to_string(row) + ": expected 4 fields, got " +
                         std::to_string(fields.size()));
      }
      RawInteraction r;
      r.user = parse_int(trim(fields[0]), "user_id");
      r.item = parse_int(trim(fields[1]), "item_id");
      r.rating = parse_double(trim(fields[2]), "rating");
      r.timestamp = parse_int(trim(fields[3]), "timestamp");
      detail::validate_interaction(r, catalog, row);
      raw.push_back(r);
    }
  }
  return {std::move(catalog), canonicalize_interactions(std::move(raw))};
}

// Writes the catalog and canonical interactions in the generic CSV layout.
// Loading the result back yields an identical catalog and interaction list.
inline void write_snapshot(const Catalog& catalog, const std::vector<RawInteraction>& raw, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::string out = "item_id,title,categories\n";
    for (const Item& item : catalog.items()) {
      std::string cats;
      for (std::size_t i = 0; i < item.categories.size(); ++i) {
        if (i > 0) cats.push_back('|');
        cats += catalog.category_name(item.categories[i]);
      }
      out += csv_row({std::to_string(item.id), item.title, cats});
    }
    write_file((std::filesystem::path(dir) / "items.csv").string(), out);
  }
  {
    std::string out = "user_id,item_id,rating,timestamp\n";
    for (const RawInteraction& r : raw) {
      out += csv_row({std::to_string(r.user), std::to_string(r.item), format_double(r.rating),
                      std::to_string(r.timestamp)});
    }
    write_file((std::filesystem::path(dir) / "interactions.csv").string(), out);
  }
}

}  // namespace bubblesim
