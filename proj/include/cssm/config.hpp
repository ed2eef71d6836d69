#pragma once

// Sectioned key-value configuration:
//
//   # comment
//   [sampler]
//   iterations = 3000
//
// Keys are validated against a schema; unknown sections or keys are errors.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cssm {

class ConfigFile {
 public:
  using Schema = std::map<std::string, std::set<std::string>>;

  static ConfigFile parse(std::istream& is);
  static ConfigFile load(const std::filesystem::path& path);

  /// Throws ConfigError naming the first section or key the schema does not know.
  void check(const Schema& schema) const;

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& def) const;
  double get_double(const std::string& section, const std::string& key, double def) const;
  long long get_int(const std::string& section, const std::string& key, long long def) const;
  std::uint64_t get_uint64(const std::string& section, const std::string& key, std::uint64_t def) const;
  /// Comma-separated values.
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace cssm
