#include "config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace eb_cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// Drops a trailing comment, ignoring '#' inside double quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

Config Config::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path);
}

Config Config::Parse(const std::string& text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string raw, section;
  int ln = 0;
  auto error = [&](int line, const std::string& msg) {
    return ConfigError(source + ":" + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++ln;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw error(ln, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw error(ln, "empty section name");
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw error(ln, "expected 'key = value'");
    if (section.empty()) throw error(ln, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw error(ln, "missing key");
    if (value.empty()) throw error(ln, "missing value for '" + key + "'");
    if (cfg.sections_[section].count(key)) {
      throw error(ln, "duplicate key '" + key + "' in [" + section + "]");
    }

    ConfigValue v;
    v.line = ln;
    if (value.front() == '[') {
      const int start = ln;
      while (value.find(']') == std::string::npos) {
        if (!std::getline(in, raw)) throw error(start, "unterminated list");
        ++ln;
        value += " " + trim(strip_comment(raw));
      }
      const auto close = value.find(']');
      if (!trim(value.substr(close + 1)).empty()) {
        throw error(ln, "unexpected text after list");
      }
      std::string body = value.substr(1, close - 1);
      for (char& c : body) {
        if (c == ',') c = ' ';
      }
      std::istringstream items(body);
      for (std::string tok; items >> tok;) {
        double d = 0.0;
        if (!parse_double(tok, d)) {
          throw error(start, "list entry '" + tok + "' is not a finite number");
        }
        v.list.push_back(d);
      }
      v.kind = ConfigValue::Kind::kList;
    } else if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        throw error(ln, "unterminated string");
      }
      v.kind = ConfigValue::Kind::kString;
      v.text = value.substr(1, value.size() - 2);
    } else if (value == "true" || value == "false") {
      v.kind = ConfigValue::Kind::kBool;
      v.boolean = value == "true";
    } else {
      if (!parse_double(value, v.number)) {
        throw error(ln, "value '" + value + "' is not a finite number");
      }
      v.kind = ConfigValue::Kind::kNumber;
    }
    cfg.sections_[section][key] = std::move(v);
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

bool Config::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

const ConfigValue& Config::get(const std::string& section,
                               const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) {
    throw ConfigError(source_ + ": missing section [" + section + "]");
  }
  auto k = s->second.find(key);
  if (k == s->second.end()) {
    throw ConfigError(source_ + ": missing key '" + key + "' in [" + section +
                      "]");
  }
  return k->second;
}

std::string Config::where(const std::string& section,
                          const std::string& key) const {
  if (!has(section, key)) return source_;
  return source_ + ":" + std::to_string(sections_.at(section).at(key).line);
}

double Config::number(const std::string& section, const std::string& key) const {
  const ConfigValue& v = get(section, key);
  if (v.kind != ConfigValue::Kind::kNumber) {
    throw ConfigError(where(section, key) + ": '" + key + "' must be a number");
  }
  return v.number;
}

double Config::number_or(const std::string& section, const std::string& key,
                         double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

long long Config::integer(const std::string& section,
                          const std::string& key) const {
  const double d = number(section, key);
  if (d != std::floor(d) || std::abs(d) > 9e15) {
    throw ConfigError(where(section, key) + ": '" + key +
                      "' must be an integer");
  }
  return static_cast<long long>(d);
}

long long Config::integer_or(const std::string& section, const std::string& key,
                             long long fallback) const {
  return has(section, key) ? integer(section, key) : fallback;
}

bool Config::boolean_or(const std::string& section, const std::string& key,
                        bool fallback) const {
  if (!has(section, key)) return fallback;
  const ConfigValue& v = get(section, key);
  if (v.kind != ConfigValue::Kind::kBool) {
    throw ConfigError(where(section, key) + ": '" + key +
                      "' must be true or false");
  }
  return v.boolean;
}

std::string Config::string_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  const ConfigValue& v = get(section, key);
  if (v.kind != ConfigValue::Kind::kString) {
    throw ConfigError(where(section, key) + ": '" + key + "' must be a string");
  }
  return v.text;
}

std::vector<double> Config::list(const std::string& section,
                                 const std::string& key,
                                 std::optional<std::size_t> expected) const {
  const ConfigValue& v = get(section, key);
  std::vector<double> out;
  if (v.kind == ConfigValue::Kind::kList) {
    out = v.list;
  } else if (v.kind == ConfigValue::Kind::kNumber) {
    out = {v.number};
  } else {
    throw ConfigError(where(section, key) + ": '" + key +
                      "' must be a list of numbers");
  }
  if (expected && out.size() != *expected) {
    throw ConfigError(where(section, key) + ": '" + key + "' has " +
                      std::to_string(out.size()) + " entries, expected " +
                      std::to_string(*expected));
  }
  return out;
}

}  // namespace eb_cli
