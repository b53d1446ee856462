#include "ergodic/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ergodic/errors.hpp"

namespace ergodic {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const char* begin = s.data();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

Config Config::parse(const std::string& text, std::string origin) {
  Config cfg;
  cfg.origin_ = std::move(origin);
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const std::string at = cfg.origin_ + ":" + std::to_string(line) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError(at + "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected 'key = value', got '" + s + "'");
    if (section.empty()) throw ConfigError(at + "key outside of any [section]");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(at + "empty key");
    auto& keys = cfg.sections_[section];
    if (keys.count(key)) throw ConfigError(at + "[" + section + "] " + key + ": duplicate key");
    keys[key] = {trim(s.substr(eq + 1)), line};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), file.string());
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

void Config::restrict_to(const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const auto& [section, keys] : sections_) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) throw ConfigError(origin_ + ": unexpected section [" + section + "]");
    for (const auto& [key, e] : keys) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError(where(section, key) + "unknown key");
    }
  }
}

std::string Config::where(const std::string& section, const std::string& key) const {
  std::string prefix = origin_;
  if (has(section, key)) {
    const int line = sections_.at(section).at(key).line;
    if (line > 0) prefix += ":" + std::to_string(line);
  }
  return prefix + ": [" + section + "] " + key + ": ";
}

const Config::Entry& Config::entry(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw ConfigError(where(section, key) + "required but missing");
  return sections_.at(section).at(key);
}

std::string Config::text(const std::string& section, const std::string& key) const {
  return entry(section, key).value;
}

std::string Config::text_or(const std::string& section, const std::string& key, std::string fallback) const {
  return has(section, key) ? text(section, key) : fallback;
}

double Config::number(const std::string& section, const std::string& key) const {
  const std::string& v = entry(section, key).value;
  const auto n = to_number(v);
  if (!n) throw ConfigError(where(section, key) + "expected a number, got '" + v + "'");
  return *n;
}

double Config::number_or(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

std::int64_t Config::integer_or(const std::string& section, const std::string& key,
                                std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = entry(section, key).value;
  std::int64_t n = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(where(section, key) + "expected an integer, got '" + v + "'");
  return n;
}

bool Config::flag_or(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = entry(section, key).value;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(where(section, key) + "expected true or false, got '" + v + "'");
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
  const std::string& v = entry(section, key).value;
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto n = to_number(trim(item));
    if (!n) throw ConfigError(where(section, key) + "expected comma-separated numbers, got '" + v + "'");
    out.push_back(*n);
  }
  if (out.empty()) throw ConfigError(where(section, key) + "empty list");
  return out;
}

void Config::set(const std::string& section, const std::string& key, std::string value) {
  sections_[section][key] = {std::move(value), 0};
}

}  // namespace ergodic
