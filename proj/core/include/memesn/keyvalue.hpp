#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "memesn/errors.hpp"

namespace memesn {

/// Flat `key = value` text with `#` comments and `include = <path>` lines.
///
/// Later assignments override earlier ones; an include is expanded in place,
/// relative to the including file. Keys keep their first-seen order so a
/// file written back out diffs cleanly against its source.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::filesystem::path& base_dir = {});
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);

  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> get_words(const std::string& key,
                                     std::vector<std::string> fallback) const;

  /// Keys that start with `prefix`, in insertion order.
  std::vector<std::string> keys(const std::string& prefix = {}) const;

  /// Merge `other` on top of this file.
  void merge(const KeyValueFile& other);

  void write(std::ostream& out) const;

 private:
  void parse_into(std::istream& in, const std::filesystem::path& base_dir, int depth);

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// Shortest round-trippable decimal form of a double.
std::string format_double(double value);

}  // namespace memesn
