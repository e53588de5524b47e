#pragma once

// Reader for the problem files consumed by the command-line tool: a TOML
// subset with [section] headers and `key = value` lines, where a value is a
// number, true/false, a double-quoted string, or a bracketed list of numbers
// (which may continue over several lines). `#` starts a comment.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eb_cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigValue {
  enum class Kind { kNumber, kBool, kString, kList };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<double> list;
  int line = 0;
};

class Config {
 public:
  static Config Load(const std::string& path);
  static Config Parse(const std::string& text, const std::string& source);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key,
                   double fallback) const;
  /// Integer-valued number; rejects fractions.
  long long integer(const std::string& section, const std::string& key) const;
  long long integer_or(const std::string& section, const std::string& key,
                       long long fallback) const;
  bool boolean_or(const std::string& section, const std::string& key,
                  bool fallback) const;
  std::string string_or(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
  /// A list, or a single number read as a one-element list. When `expected`
  /// is given the length must match.
  std::vector<double> list(const std::string& section, const std::string& key,
                           std::optional<std::size_t> expected = {}) const;

  /// "file:line" of a key, or of the file when the key is absent.
  std::string where(const std::string& section, const std::string& key) const;
  const std::string& source() const { return source_; }

 private:
  const ConfigValue& get(const std::string& section,
                         const std::string& key) const;

  std::string source_;
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

}  // namespace eb_cli
