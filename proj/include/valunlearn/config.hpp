#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace valunlearn {

/// Flat `key = value` text configuration. Blank lines and lines starting
/// with '#' are ignored; keys are case-sensitive. Reads are tracked so that
/// callers can reject unknown keys.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& source = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_long_list(const std::string& key) const;

  void set(const std::string& key, std::string value);
  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  /// Keys present but never read.
  std::vector<std::string> unused() const;

  std::string to_text() const;

 private:
  std::map<std::string, std::string> entries_;
  std::string source_;
  mutable std::set<std::string> read_;
};

}  // namespace valunlearn
