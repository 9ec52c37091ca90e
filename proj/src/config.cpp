#include "valunlearn/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "valunlearn/errors.hpp"

namespace valunlearn {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i] == '#' && std::isspace(static_cast<unsigned char>(t[i - 1]))) {
        t = trim(t.substr(0, i));
        break;
      }
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (kv.entries_.contains(key)) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv.entries_[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

bool KeyValues::has(const std::string& key) const { return entries_.contains(key); }

std::string KeyValues::get(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  return it->second;
}

std::string KeyValues::require(const std::string& key) const {
  if (!has(key)) throw ConfigError(source_ + ": missing required key '" + key + "'");
  return get(key, {});
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, {});
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(source_ + ": key '" + key + "' expects a number, got '" + v + "'");
  }
}

long KeyValues::get_long(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, {});
  long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(source_ + ": key '" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, {});
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(source_ + ": key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<long> KeyValues::get_long_list(const std::string& key) const {
  std::vector<long> out;
  if (!has(key)) return out;
  std::stringstream ss(get(key, {}));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    long x = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(source_ + ": key '" + key + "' expects a comma-separated integer list");
    }
    out.push_back(x);
  }
  return out;
}

void KeyValues::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

std::vector<std::string> KeyValues::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (!read_.contains(k)) out.push_back(k);
  }
  return out;
}

std::string KeyValues::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace valunlearn
