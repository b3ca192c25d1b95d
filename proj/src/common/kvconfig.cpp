#include "lfgp/kvconfig.h"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lfgp {
namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    c == '.' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string dir_of(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  KeyValueConfig cfg;
  cfg.parse(read_file(path), path, dir_of(path), 0);
  return cfg;
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text,
                                           const std::string& origin) {
  KeyValueConfig cfg;
  cfg.parse(text, origin, ".", 0);
  return cfg;
}

void KeyValueConfig::parse(const std::string& text, const std::string& origin,
                           const std::string& dir, int depth) {
  if (depth > 16)
    throw std::runtime_error("config: include depth exceeds 16 at " + origin +
                             " (include cycle?)");
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto where = [&] {
      return origin + ":" + std::to_string(lineno);
    };
    if (t.rfind("include ", 0) == 0 || t == "include") {
      std::string target = trim(t.substr(7));
      if (target.empty())
        throw std::runtime_error("config: include without a path at " + where());
      if (target[0] != '/') target = dir + "/" + target;
      parse(read_file(target), target, dir_of(target), depth + 1);
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected 'key = value' at " + where() +
                               ": " + t);
    const std::string key = trim(t.substr(0, eq));
    if (!valid_key(key))
      throw std::runtime_error("config: bad key '" + key + "' at " + where());
    kv_[key] = trim(t.substr(eq + 1));
  }
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const {
  return kv_.count(key) != 0;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& dflt) const {
  consumed_.insert(key);
  const auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double dflt) const {
  consumed_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0')
    throw std::runtime_error("config: key '" + key + "' is not a number: '" +
                             it->second + "'");
  return v;
}

long KeyValueConfig::get_long(const std::string& key, long dflt) const {
  consumed_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  char* end = nullptr;
  const long v = std::strtol(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    throw std::runtime_error("config: key '" + key + "' is not an integer: '" +
                             it->second + "'");
  return v;
}

int KeyValueConfig::get_int(const std::string& key, int dflt) const {
  return static_cast<int>(get_long(key, dflt));
}

bool KeyValueConfig::get_bool(const std::string& key, bool dflt) const {
  consumed_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: key '" + key + "' is not a boolean: '" + v +
                           "'");
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (!consumed_.count(k)) out.push_back(k);
  return out;
}

void KeyValueConfig::reject_unused() const {
  const auto bad = unused_keys();
  if (bad.empty()) return;
  std::string msg = "config: unknown key(s):";
  for (const auto& k : bad) msg += " '" + k + "'";
  throw std::runtime_error(msg);
}

}  // namespace lfgp
