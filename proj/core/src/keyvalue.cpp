#include "memesn/keyvalue.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace memesn {
namespace {

constexpr int kMaxIncludeDepth = 16;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return HUGE_VAL;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

KeyValueFile KeyValueFile::parse(std::istream& in, const std::filesystem::path& base_dir) {
  KeyValueFile kv;
  kv.parse_into(in, base_dir, 0);
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  KeyValueFile kv;
  kv.parse_into(in, path.parent_path(), 0);
  return kv;
}

void KeyValueFile::parse_into(std::istream& in, const std::filesystem::path& base_dir,
                              int depth) {
  if (depth > kMaxIncludeDepth) throw ConfigError("include nesting too deep");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (key == "include") {
      const std::filesystem::path p = base_dir / value;
      std::ifstream sub(p);
      if (!sub) throw ConfigError("cannot open included file '" + p.string() + "'");
      parse_into(sub, p.parent_path(), depth + 1);
      continue;
    }
    set(key, value);
  }
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) order_.push_back(key);
  values_[key] = value;
}

void KeyValueFile::set(const std::string& key, double value) { set(key, format_double(value)); }

const std::string& KeyValueFile::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string t = trim(it->second);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + it->second + "'");
  }
  return v;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> KeyValueFile::get_words(const std::string& key,
                                                 std::vector<std::string> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(it->second);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> KeyValueFile::get_list(const std::string& key,
                                           std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& w : get_words(key, {})) out.push_back(parse_double(key, w));
  return out;
}

std::vector<std::string> KeyValueFile::keys(const std::string& prefix) const {
  std::vector<std::string> out;
  std::copy_if(order_.begin(), order_.end(), std::back_inserter(out),
               [&](const std::string& k) { return k.rfind(prefix, 0) == 0; });
  return out;
}

void KeyValueFile::merge(const KeyValueFile& other) {
  for (const auto& k : other.order_) set(k, other.values_.at(k));
}

void KeyValueFile::write(std::ostream& out) const {
  for (const auto& k : order_) out << k << " = " << values_.at(k) << '\n';
}

}  // namespace memesn
