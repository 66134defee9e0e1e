#include "lengthtune/keyvalue.hpp"

#include <charconv>

#include "lengthtune/corpus.hpp"

namespace lengthtune {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error("bad value for '" + std::string(key) + "': '" + std::string(text) + "'");
  return value;
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected `key = value`", line_no);
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (kv.has(key)) throw ParseError("duplicate key '" + std::string(key) + "'", line_no);
    kv.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

bool KeyValues::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::string KeyValues::get(std::string_view key, std::string_view fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? std::string(fallback) : it->second;
}

double KeyValues::get_double(std::string_view key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<double>(key, it->second);
}

std::int64_t KeyValues::get_int(std::string_view key, std::int64_t fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<std::int64_t>(key, it->second);
}

std::uint64_t KeyValues::get_uint(std::string_view key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<std::uint64_t>(key, it->second);
}

bool KeyValues::get_bool(std::string_view key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& v = it->second;
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw Error("bad boolean for '" + std::string(key) + "': '" + v + "'");
}

std::vector<std::string> KeyValues::get_list(std::string_view key, const std::vector<std::string>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string text = it->second;
  for (auto& c : text)
    if (c == ',') c = ' ';
  return tokenize(text);
}

void KeyValues::set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

void KeyValues::require_known(const std::set<std::string, std::less<>>& known) const {
  for (const auto& kv : values_)
    if (known.find(kv.first) == known.end()) throw Error("unknown key '" + kv.first + "'");
}

}  // namespace lengthtune
