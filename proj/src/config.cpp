#include "cssm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "cssm/errors.hpp"

namespace cssm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

}  // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

ConfigFile ConfigFile::parse(std::istream& is) {
  ConfigFile cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno, 1);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError("empty section name", lineno, 1);
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno, 1);
    if (section.empty()) throw ParseError("key outside of any section", lineno, 1);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno, 1);
    auto& sec = cfg.sections_[section];
    if (sec.count(key)) throw ConfigError("duplicate key " + where(section, key) + " at line " + std::to_string(lineno));
    sec[key] = {trim(line.substr(eq + 1)), lineno};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  try {
    return parse(is);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.row(), e.column());
  }
}

void ConfigFile::check(const Schema& schema) const {
  for (const auto& [name, entries] : sections_) {
    const auto s = schema.find(name);
    if (s == schema.end()) throw ConfigError("unknown config section [" + name + "]");
    for (const auto& [key, entry] : entries)
      if (!s->second.count(key))
        throw ConfigError("unknown config key " + where(name, key) + " at line " + std::to_string(entry.line));
  }
}

bool ConfigFile::has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

void ConfigFile::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = {value, 0};
}

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second.value;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key, const std::string& def) const {
  return get(section, key).value_or(def);
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double def) const {
  const auto v = get(section, key);
  if (!v) return def;
  double x = 0.0;
  const auto r = std::from_chars(v->data(), v->data() + v->size(), x);
  if (r.ec != std::errc() || r.ptr != v->data() + v->size() || !std::isfinite(x))
    throw ConfigError(where(section, key) + ": expected a number, got '" + *v + "'");
  return x;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key, long long def) const {
  const auto v = get(section, key);
  if (!v) return def;
  long long x = 0;
  const auto r = std::from_chars(v->data(), v->data() + v->size(), x);
  if (r.ec != std::errc() || r.ptr != v->data() + v->size())
    throw ConfigError(where(section, key) + ": expected an integer, got '" + *v + "'");
  return x;
}

std::uint64_t ConfigFile::get_uint64(const std::string& section, const std::string& key, std::uint64_t def) const {
  const auto v = get(section, key);
  if (!v) return def;
  std::uint64_t x = 0;
  const auto r = std::from_chars(v->data(), v->data() + v->size(), x);
  if (r.ec != std::errc() || r.ptr != v->data() + v->size())
    throw ConfigError(where(section, key) + ": expected a non-negative integer, got '" + *v + "'");
  return x;
}

std::vector<std::string> ConfigFile::get_list(const std::string& section, const std::string& key) const {
  const auto v = get(section, key);
  if (!v) return {};
  return split_list(*v);
}

std::vector<double> ConfigFile::get_double_list(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(section, key)) {
    double x = 0.0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), x);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size() || !std::isfinite(x))
      throw ConfigError(where(section, key) + ": expected a number, got '" + item + "'");
    out.push_back(x);
  }
  return out;
}

}  // namespace cssm
