#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relightkit {

// Flat `key = value` text, one entry per line; `#` starts a comment.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text, const std::string& origin = "<text>");
  static KeyValues read(const std::filesystem::path& file);

  void set(const std::string& key, std::string value);
  bool contains(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;
  int require_int(const std::string& key) const;
  double require_double(const std::string& key) const;

  // Entries whose key starts with `prefix`, with the prefix stripped.
  KeyValues with_prefix(const std::string& prefix) const;

  std::string to_string() const;
  void write(const std::filesystem::path& file) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');
int parse_int_strict(std::string_view s, const std::string& what);
double parse_double_strict(std::string_view s, const std::string& what);
bool parse_bool_strict(std::string_view s, const std::string& what);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// 64-bit FNV-1a, hex encoded.
std::string content_hash(std::string_view text);

}  // namespace relightkit
