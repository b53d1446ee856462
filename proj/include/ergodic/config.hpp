#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ergodic {

/// Sectioned key = value text:
///
///   # comment
///   [dynamics]
///   drift = 0.05 * x
///   diffusion = 0.2 * x
///
/// Every lookup error is a ConfigError that names the section, key and
/// source line.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(const std::string& text, std::string origin = "<config>");
  static Config load(const std::filesystem::path& file);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  /// Rejects sections and keys outside `allowed` (section -> keys).
  void restrict_to(const std::map<std::string, std::vector<std::string>>& allowed) const;

  std::string text(const std::string& section, const std::string& key) const;
  std::string text_or(const std::string& section, const std::string& key, std::string fallback) const;
  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t integer_or(const std::string& section, const std::string& key, std::int64_t fallback) const;
  bool flag_or(const std::string& section, const std::string& key, bool fallback) const;
  /// Comma-separated numbers.
  std::vector<double> numbers(const std::string& section, const std::string& key) const;

  /// "config.ini:12: [budget] dt: " prefix for diagnostics.
  std::string where(const std::string& section, const std::string& key) const;

  /// Records or overrides a value (used for command-line flags).
  void set(const std::string& section, const std::string& key, std::string value);

  const std::string& origin() const { return origin_; }

 private:
  const Entry& entry(const std::string& section, const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace ergodic
