#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sonfis/error.hpp"
#include "sonfis/numeric_format.hpp"

namespace sonfis {

/// Flat `key = value` text, one entry per line; '#' starts a comment.
/// Keys keep their file order so serialization is stable.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>") {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos)
        throw ValidationError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key(trim(body.substr(0, eq)));
      const std::string value(trim(body.substr(eq + 1)));
      if (key.empty()) throw ValidationError(source + ":" + std::to_string(line_no) + ": empty key");
      if (cfg.has(key)) throw ValidationError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      cfg.set(key, value);
    }
    return cfg;
  }

  static KeyValueConfig parse_string(const std::string& text, const std::string& source = "<config>") {
    std::istringstream in(text);
    return parse(in, source);
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return parse(in, path.string());
  }

  bool has(const std::string& key) const { return index_.count(key) != 0; }

  void set(const std::string& key, std::string value) {
    if (auto it = index_.find(key); it != index_.end()) {
      entries_[it->second].second = std::move(value);
      return;
    }
    index_.emplace(key, entries_.size());
    entries_.emplace_back(key, std::move(value));
  }

  void set_real(const std::string& key, double v) { set(key, format_exact(v)); }

  std::optional<std::string> find(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].second;
  }

  std::string require_string(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ValidationError("missing required key '" + key + "'");
    return *v;
  }

  double require_real(const std::string& key) const { return to_real(key, require_string(key)); }

  double get_real(const std::string& key, double fallback) const {
    const auto v = find(key);
    return v ? to_real(key, *v) : fallback;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto v = find(key);
    return v ? to_uint(key, *v) : fallback;
  }

  std::uint64_t require_uint(const std::string& key) const { return to_uint(key, require_string(key)); }

  std::vector<double> get_reals(const std::string& key, std::vector<double> fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(to_real(key, item));
    if (out.empty()) throw ValidationError("key '" + key + "': empty list");
    return out;
  }

  std::vector<std::size_t> get_uints(const std::string& key, std::vector<std::size_t> fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    std::vector<std::size_t> out;
    for (const auto& item : split_list(*v)) out.push_back(static_cast<std::size_t>(to_uint(key, item)));
    if (out.empty()) throw ValidationError("key '" + key + "': empty list");
    return out;
  }

  /// Rejects keys outside `allowed`. Keys under "manifest." are run metadata
  /// and always accepted, so a manifest can be fed back as a config.
  void check_known(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : entries_) {
      if (key.rfind("manifest.", 0) == 0) continue;
      if (!allowed.count(key)) throw ValidationError("unknown config key '" + key + "'");
    }
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string serialize() const {
    std::string out;
    for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
    return out;
  }

  static std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + format_exact(values[i]);
    return out;
  }

  static std::string join(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + std::to_string(values[i]);
    return out;
  }

 private:
  static double to_real(const std::string& key, const std::string& text) {
    const auto v = parse_real(text);
    if (!v) throw ValidationError("key '" + key + "': not a number: '" + text + "'");
    return *v;
  }

  static std::uint64_t to_uint(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
      throw ValidationError("key '" + key + "': not a non-negative integer: '" + text + "'");
    return v;
  }

  static std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) items.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return items;
  }

  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace sonfis
