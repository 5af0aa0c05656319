#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "toporel/common.hpp"

namespace toporel {

struct ConfigKeySpec {
  const char* key;
  const char* default_value;
  const char* doc;
};

// Flat `key = value` file with `#` comments. Unknown keys are a hard error;
// every recognized key has a documented default.
class Config {
 public:
  Config();  // defaults only

  static Config load(const std::string& path);
  void apply_file(const std::string& path);
  // "key=value" as passed to --set.
  void apply_override(const std::string& assignment);

  const std::string& get_string(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::int64_t get_int64(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  // Full resolved configuration, one sorted `key = value` line each.
  std::string resolved_text() const;

  static const std::vector<ConfigKeySpec>& known_keys();

 private:
  void set(const std::string& key, const std::string& value);

  std::map<std::string, std::string> values_;
};

}  // namespace toporel
