#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace faor {

// Flat `key = value` text with `#` comments. Later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  int get_int(std::string_view key, int fallback) const;
  long long get_int64(std::string_view key, long long fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<long long> get_int_list(std::string_view key, std::vector<long long> fallback) const;

  void set(std::string key, std::string value);
  // Keys that no getter has asked for.
  std::vector<std::string> unused_keys() const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

 private:
  const std::string* lookup(std::string_view key) const;

  std::map<std::string, std::string, std::less<>> entries_;
  mutable std::set<std::string, std::less<>> used_;
};

}  // namespace faor
