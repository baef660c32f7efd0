#pragma once

// Key-value configuration: one `key = value` per line, `#` starts a comment.
// Keys are case-sensitive; later assignments override earlier ones.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reel {

class Config {
 public:
  Config() = default;

  /// Throws UsageError with the offending line number on malformed input.
  static Config parse(const std::string& text);
  /// Throws UsageError naming the path when the file cannot be read.
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  /// Copy of this config with every key of `defaults` that is absent here added.
  Config with_defaults(const Config& defaults) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Canonical text: sorted `key = value` lines. parse(text()) round-trips.
  std::string text() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace reel
