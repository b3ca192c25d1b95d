#pragma once
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lfgp {

// Flat key-value configuration text.
//
// Format, one directive per line:
//   key = value          keys match [A-Za-z0-9_.-]+; value is the rest of the
//                        line with outer whitespace trimmed (may be empty)
//   include <path>       splice another file; relative paths resolve against
//                        the directory of the including file
//   # comment            full-line comments only; blank lines are skipped
//
// Later assignments win, so an including file can override included defaults.
// Typed getters record every key they are asked for; after wiring a config,
// call unused_keys() to reject typos (keys present in the file that no getter
// ever consumed).
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  // Throws std::runtime_error with file:line on IO or syntax errors.
  static KeyValueConfig from_file(const std::string& path);
  // Same grammar, no filesystem; `include` is an error here unless paths are
  // absolute. `origin` names the source in error messages.
  static KeyValueConfig from_string(const std::string& text,
                                    const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  // Getters return the default when the key is absent and throw
  // std::runtime_error naming the key when the stored text does not parse.
  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  long get_long(const std::string& key, long dflt) const;
  int get_int(const std::string& key, int dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;  // true/false/1/0/yes/no

  // Keys present in the config that no getter has consumed yet.
  std::vector<std::string> unused_keys() const;
  // Throws std::runtime_error listing unused keys, if any. Call after wiring.
  void reject_unused() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  void parse(const std::string& text, const std::string& origin,
             const std::string& dir, int depth);

  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;
};

}  // namespace lfgp
