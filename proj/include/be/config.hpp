#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "be/errors.hpp"

namespace be {

// TOML-style configuration subset: [section] headers, key = value pairs,
// strings, integers, floats, booleans, and flat arrays, with # comments.
// Keys are addressed as "section.key". Dotted keys, nested tables, dates,
// and multi-line values are out of scope.

struct ConfigValue {
  std::variant<std::string, std::int64_t, double, bool,
               std::vector<std::string>, std::vector<double>>
      data;
};

namespace detail {

inline std::string config_trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strip a trailing comment, respecting double-quoted strings.
inline std::string config_strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

inline bool looks_like_int(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

inline ConfigValue parse_scalar(const std::string& raw, std::size_t line_no) {
  ConfigValue v;
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    v.data = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw == "true") {
    v.data = true;
    return v;
  }
  if (raw == "false") {
    v.data = false;
    return v;
  }
  if (looks_like_int(raw)) {
    v.data = static_cast<std::int64_t>(std::stoll(raw));
    return v;
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(raw, &used);
    if (used == raw.size()) {
      v.data = d;
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("config parse: line " + std::to_string(line_no) +
                    ": cannot parse value '" + raw + "'");
}

inline std::vector<std::string> split_array_items(const std::string& body,
                                                  std::size_t line_no) {
  std::vector<std::string> items;
  std::string current;
  bool in_string = false;
  for (char c : body) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(config_trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  const std::string last = config_trim(current);
  if (!last.empty()) items.push_back(last);
  if (in_string)
    throw ConfigError("config parse: line " + std::to_string(line_no) +
                      ": unterminated string in array");
  return items;
}

}  // namespace detail

class ConfigTable {
 public:
  static ConfigTable parse(std::istream& in) {
    ConfigTable table;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      line = detail::config_trim(detail::config_strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("config parse: line " + std::to_string(line_no) +
                            ": malformed section header");
        section = detail::config_trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ConfigError("config parse: line " + std::to_string(line_no) +
                            ": empty section name");
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config parse: line " + std::to_string(line_no) +
                          ": expected key = value");
      const std::string key = detail::config_trim(line.substr(0, eq));
      const std::string raw = detail::config_trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config parse: line " + std::to_string(line_no) +
                          ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (table.values_.count(full))
        throw ConfigError("config parse: line " + std::to_string(line_no) +
                          ": duplicate key '" + full + "'");
      if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']')
          throw ConfigError("config parse: line " + std::to_string(line_no) +
                            ": malformed array");
        const auto items = detail::split_array_items(
            raw.substr(1, raw.size() - 2), line_no);
        bool all_strings = !items.empty();
        for (const auto& item : items)
          all_strings = all_strings && item.size() >= 2 && item.front() == '"';
        ConfigValue v;
        if (all_strings) {
          std::vector<std::string> out;
          for (const auto& item : items)
            out.push_back(item.substr(1, item.size() - 2));
          v.data = std::move(out);
        } else {
          std::vector<double> out;
          for (const auto& item : items) {
            ConfigValue scalar = detail::parse_scalar(item, line_no);
            if (std::holds_alternative<double>(scalar.data))
              out.push_back(std::get<double>(scalar.data));
            else if (std::holds_alternative<std::int64_t>(scalar.data))
              out.push_back(
                  static_cast<double>(std::get<std::int64_t>(scalar.data)));
            else
              throw ConfigError("config parse: line " +
                                std::to_string(line_no) +
                                ": mixed or unsupported array element types");
          }
          v.data = std::move(out);
        }
        table.values_[full] = std::move(v);
      } else {
        table.values_[full] = detail::parse_scalar(raw, line_no);
      }
    }
    return table;
  }

  static ConfigTable parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, ConfigValue>& values() const { return values_; }
  const ConfigValue* find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, ConfigValue> values_;
};

// Accumulates every missing or ill-typed key and reports them in one error,
// so a bad config surfaces all problems in a single pass.
class ConfigReader {
 public:
  explicit ConfigReader(const ConfigTable& table) : table_(table) {}

  std::string get_string(const std::string& key) {
    const ConfigValue* v = require(key);
    if (v && std::holds_alternative<std::string>(v->data))
      return std::get<std::string>(v->data);
    if (v) type_error(key, "string");
    return {};
  }

  std::string get_string_or(const std::string& key, std::string fallback) {
    if (!table_.has(key)) return fallback;
    return get_string(key);
  }

  std::int64_t get_int(const std::string& key) {
    const ConfigValue* v = require(key);
    if (v && std::holds_alternative<std::int64_t>(v->data))
      return std::get<std::int64_t>(v->data);
    if (v) type_error(key, "integer");
    return 0;
  }

  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) {
    if (!table_.has(key)) return fallback;
    return get_int(key);
  }

  double get_double(const std::string& key) {
    const ConfigValue* v = require(key);
    if (v) {
      if (std::holds_alternative<double>(v->data))
        return std::get<double>(v->data);
      if (std::holds_alternative<std::int64_t>(v->data))
        return static_cast<double>(std::get<std::int64_t>(v->data));
      type_error(key, "float");
    }
    return 0.0;
  }

  double get_double_or(const std::string& key, double fallback) {
    if (!table_.has(key)) return fallback;
    return get_double(key);
  }

  bool get_bool(const std::string& key) {
    const ConfigValue* v = require(key);
    if (v && std::holds_alternative<bool>(v->data))
      return std::get<bool>(v->data);
    if (v) type_error(key, "boolean");
    return false;
  }

  bool get_bool_or(const std::string& key, bool fallback) {
    if (!table_.has(key)) return fallback;
    return get_bool(key);
  }

  std::vector<double> get_double_array(const std::string& key) {
    const ConfigValue* v = require(key);
    if (v && std::holds_alternative<std::vector<double>>(v->data))
      return std::get<std::vector<double>>(v->data);
    if (v) type_error(key, "array of numbers");
    return {};
  }

  std::vector<double> get_double_array_or(const std::string& key,
                                          std::vector<double> fallback) {
    if (!table_.has(key)) return fallback;
    return get_double_array(key);
  }

  std::vector<std::string> get_string_array(const std::string& key) {
    const ConfigValue* v = require(key);
    if (v && std::holds_alternative<std::vector<std::string>>(v->data))
      return std::get<std::vector<std::string>>(v->data);
    if (v) type_error(key, "array of strings");
    return {};
  }

  std::vector<std::string> get_string_array_or(
      const std::string& key, std::vector<std::string> fallback) {
    if (!table_.has(key)) return fallback;
    return get_string_array(key);
  }

  bool ok() const { return problems_.empty(); }

  // Throws with the full problem list when anything was missing or
  // ill-typed.
  void finish(const std::string& context) const {
    if (problems_.empty()) return;
    std::ostringstream msg;
    msg << "config error (" << context << "): " << problems_.size()
        << " problem(s):";
    for (const auto& p : problems_) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }

 private:
  const ConfigValue* require(const std::string& key) {
    const ConfigValue* v = table_.find(key);
    if (v == nullptr) problems_.push_back("missing key '" + key + "'");
    return v;
  }

  void type_error(const std::string& key, const char* want) {
    problems_.push_back("key '" + key + "' is not a " + want);
  }

  const ConfigTable& table_;
  std::vector<std::string> problems_;
};

}  // namespace be
