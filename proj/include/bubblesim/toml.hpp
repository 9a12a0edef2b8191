#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bubblesim/errors.hpp"
#include "bubblesim/strutil.hpp"

namespace bubblesim {

// Value model for the TOML subset the config format uses: scalar strings,
// integers, floats, booleans, and flat arrays of one scalar kind.
struct TomlValue {
  enum class Kind { kString, kInt, kFloat, kBool, kArray };
  Kind kind = Kind::kString;
  std::string str;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::vector<TomlValue> items;

  const char* kind_name() const {
    switch (kind) {
      case Kind::kString: return "string";
      case Kind::kInt: return "integer";
      case Kind::kFloat: return "float";
      case Kind::kBool: return "boolean";
      case Kind::kArray: return "array";
    }
    return "?";
  }
};

// Line-oriented strict parser. Supported: comments, [section] headers,
// key = value with the scalar kinds above. Anything else is an error, as is
// redefining a key or a section.
class TomlDoc {
 public:
  static TomlDoc parse(std::string_view text, const std::string& origin = "config") {
    TomlDoc doc;
    std::string section;
    doc.sections_[""];
    std::size_t line_no = 0;
    for (std::string_view raw_line : split(text, "\n")) {
      ++line_no;
      std::string_view line = trim(strip_comment(raw_line, origin, line_no));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(where(origin, line_no) + "unterminated section header");
        std::string_view name = trim(line.substr(1, line.size() - 2));
        if (name.empty() || !is_bare_key(name)) {
          throw ParseError(where(origin, line_no) + "bad section name '" + std::string(name) + "'");
        }
        if (!doc.sections_.emplace(std::string(name), std::map<std::string, TomlValue>{}).second) {
          throw ParseError(where(origin, line_no) + "section [" + std::string(name) + "] redefined");
        }
        section = std::string(name);
        continue;
      }
      std::size_t eq = find_unquoted(line, '=');
      if (eq == std::string_view::npos) {
        throw ParseError(where(origin, line_no) + "expected 'key = value', got '" + std::string(line) + "'");
      }
      std::string_view key = trim(line.substr(0, eq));
      if (key.empty() || !is_bare_key(key)) {
        throw ParseError(where(origin, line_no) + "bad key '" + std::string(key) + "'");
      }
      TomlValue value = parse_value(trim(line.substr(eq + 1)), origin, line_no);
      if (!doc.sections_[section].emplace(std::string(key), std::move(value)).second) {
        throw ParseError(where(origin, line_no) + "key '" + std::string(key) + "' redefined");
      }
    }
    return doc;
  }

  const std::map<std::string, std::map<std::string, TomlValue>>& sections() const { return sections_; }

  bool has(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    return sit != sections_.end() && sit->second.count(key) != 0;
  }

  const TomlValue& at(const std::string& section, const std::string& key) const {
    return sections_.at(section).at(key);
  }

 private:
  static std::string where(const std::string& origin, std::size_t line) {
    return origin + ":" + std::to_string(line) + ": ";
  }

  static bool is_bare_key(std::string_view s) {
    for (char c : s) {
      bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
      if (!ok) return false;
    }
    return true;
  }

  static std::string_view strip_comment(std::string_view line, const std::string& origin, std::size_t line_no) {
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
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
      } else if (c == '#') {
        return line.substr(0, i);
      }
    }
    if (in_string) throw ParseError(where(origin, line_no) + "unterminated string");
    return line;
  }

  static std::size_t find_unquoted(std::string_view line, char target) {
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
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
      if (c == '"') in_string = true;
      if (!in_string && c == target) return i;
    }
    return std::string_view::npos;
  }

  static std::string parse_string(std::string_view s, const std::string& origin, std::size_t line_no) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
      throw ParseError(where(origin, line_no) + "expected a quoted string, got '" + std::string(s) + "'");
    }
    std::string out;
    bool escaped = false;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      char c = s[i];
      if (escaped) {
        switch (c) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default:
            throw ParseError(where(origin, line_no) + std::string("unsupported escape '\\") + c + "'");
        }
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        throw ParseError(where(origin, line_no) + "stray quote inside string");
      } else {
        out.push_back(c);
      }
    }
    if (escaped) throw ParseError(where(origin, line_no) + "dangling escape at end of string");
    return out;
  }

  static bool looks_like_int(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') return false;
    }
    return true;
  }

  static std::vector<std::string_view> split_array_items(std::string_view body, const std::string& origin,
                                                         std::size_t line_no) {
    std::vector<std::string_view> out;
    bool in_string = false;
    bool escaped = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      bool at_end = i == body.size();
      char c = at_end ? ',' : body[i];
      if (!at_end && in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (!at_end && c == '"') {
        in_string = true;
        continue;
      }
      if (c == ',') {
        out.push_back(trim(body.substr(start, i - start)));
        start = i + 1;
      }
    }
    if (in_string) throw ParseError(where(origin, line_no) + "unterminated string in array");
    if (!out.empty() && out.back().empty()) {
      throw ParseError(where(origin, line_no) + "trailing comma or empty array element");
    }
    return out;
  }

  static TomlValue parse_value(std::string_view s, const std::string& origin, std::size_t line_no) {
    TomlValue v;
    if (s.empty()) throw ParseError(where(origin, line_no) + "missing value");
    if (s.front() == '"') {
      v.kind = TomlValue::Kind::kString;
      v.str = parse_string(s, origin, line_no);
      return v;
    }
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(where(origin, line_no) + "unterminated array");
      v.kind = TomlValue::Kind::kArray;
      std::string_view body = trim(s.substr(1, s.size() - 2));
      if (body.empty()) return v;
      for (std::string_view item : split_array_items(body, origin, line_no)) {
        if (item.empty()) throw ParseError(where(origin, line_no) + "empty array element");
        TomlValue inner = parse_value(item, origin, line_no);
        if (inner.kind == TomlValue::Kind::kArray) {
          throw ParseError(where(origin, line_no) + "nested arrays are not supported");
        }
        if (!v.items.empty() && v.items.front().kind != inner.kind) {
          throw ParseError(where(origin, line_no) + "array elements must share one type");
        }
        v.items.push_back(std::move(inner));
      }
      return v;
    }
    if (s == "true" || s == "false") {
      v.kind = TomlValue::Kind::kBool;
      v.boolean = s == "true";
      return v;
    }
    if (looks_like_int(s)) {
      v.kind = TomlValue::Kind::kInt;
      v.integer = parse_int(s, "value");
      return v;
    }
    v.kind = TomlValue::Kind::kFloat;
    v.real = parse_double(s, "value");  // rejects anything non-numeric
    return v;
  }

  std::map<std::string, std::map<std::string, TomlValue>> sections_;
};

// Read-side wrapper that records every key it serves. finish() fails on
// unread keys or unknown sections, so misspelled config entries can never be
// silently ignored.
class TomlCursor {
 public:
  explicit TomlCursor(TomlDoc doc) : doc_(std::move(doc)) {}

  void allow_section(const std::string& name) { allowed_.insert(name); }

  bool has(const std::string& section, const std::string& key) {
    allowed_.insert(section);
    return doc_.has(section, key);
  }

  std::string get_string(const std::string& section, const std::string& key, std::string fallback) {
    const TomlValue* v = fetch(section, key);
    if (!v) return fallback;
    require_kind(*v, TomlValue::Kind::kString, section, key);
    return v->str;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) {
    const TomlValue* v = fetch(section, key);
    if (!v) return fallback;
    require_kind(*v, TomlValue::Kind::kBool, section, key);
    return v->boolean;
  }

  std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback) {
    const TomlValue* v = fetch(section, key);
    if (!v) return fallback;
    require_kind(*v, TomlValue::Kind::kInt, section, key);
    return v->integer;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    const TomlValue* v = fetch(section, key);
    if (!v) return fallback;
    if (v->kind == TomlValue::Kind::kInt) return static_cast<double>(v->integer);
    require_kind(*v, TomlValue::Kind::kFloat, section, key);
    return v->real;
  }

  std::vector<std::int64_t> get_int_array(const std::string& section, const std::string& key,
                                          std::vector<std::int64_t> fallback) {
    const TomlValue* v = fetch(section, key);
    if (!v) return fallback;
    require_kind(*v, TomlValue::Kind::kArray, section, key);
    std::vector<std::int64_t> out;
    for (const TomlValue& item : v->items) {
      if (item.kind != TomlValue::Kind::kInt) throw ValidationError(describe(section, key) + " must hold integers");
      out.push_back(item.integer);
    }
    return out;
  }

  std::vector<double> get_double_array(const std::string& section, const std::string& key,
                                       std::vector<double> fallback) {
    const TomlValue* v = fetch(section, key);
    if (!v) return fallback;
    require_kind(*v, TomlValue::Kind::kArray, section, key);
    std::vector<double> out;
    for (const TomlValue& item : v->items) {
      if (item.kind == TomlValue::Kind::kInt) {
        out.push_back(static_cast<double>(item.integer));
      } else if (item.kind == TomlValue::Kind::kFloat) {
        out.push_back(item.real);
      } else {
        throw ValidationError(describe(section, key) + " must hold numbers");
      }
    }
    return out;
  }

  void finish() const {
    std::vector<std::string> problems;
    for (const auto& [section, keys] : doc_.sections()) {
      if (!section.empty() && allowed_.count(section) == 0) {
        problems.push_back("unknown section [" + section + "]");
        continue;
      }
      for (const auto& [key, value] : keys) {
        if (consumed_.count({section, key}) == 0) problems.push_back("unknown key " + describe(section, key));
      }
    }
    if (!problems.empty()) {
      std::string msg = "config rejected:";
      for (const auto& p : problems) msg += "\n  " + p;
      throw ValidationError(msg);
    }
  }

 private:
  static std::string describe(const std::string& section, const std::string& key) {
    return section.empty() ? "'" + key + "'" : "'" + section + "." + key + "'";
  }

  void require_kind(const TomlValue& v, TomlValue::Kind kind, const std::string& section,
                    const std::string& key) const {
    if (v.kind != kind) {
      TomlValue expected;
      expected.kind = kind;
      throw ValidationError(describe(section, key) + " must be a " + expected.kind_name() + ", got " +
                            v.kind_name());
    }
  }

  const TomlValue* fetch(const std::string& section, const std::string& key) {
    allowed_.insert(section);
    if (!doc_.has(section, key)) return nullptr;
    consumed_.insert({section, key});
    return &doc_.at(section, key);
  }

  TomlDoc doc_;
  std::set<std::pair<std::string, std::string>> consumed_;
  std::set<std::string> allowed_;
};

}  // namespace bubblesim
