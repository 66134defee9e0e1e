#pragma once

// Flat `key = value` text: one pair per line, `#` starts a comment.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lengthtune {

class KeyValues {
 public:
  static KeyValues parse(std::string_view text);

  bool has(std::string_view key) const;
  std::string get(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  // Comma- or space-separated list.
  std::vector<std::string> get_list(std::string_view key, const std::vector<std::string>& fallback) const;

  void set(std::string key, std::string value);
  const std::map<std::string, std::string, std::less<>>& entries() const { return values_; }

  // Throws naming the first key not in `known`.
  void require_known(const std::set<std::string, std::less<>>& known) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace lengthtune
