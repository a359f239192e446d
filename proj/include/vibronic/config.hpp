// config.hpp - flat "key = value" configuration files.
//
//   # comment
//   n_spins = 3
//   kappa_list = 0, 0.005, 0.02
//
// Every value remembers where it came from ("run.cfg:4" or "--set") so
// validation errors can point at the offending line.

#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vibronic {

class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    std::string origin;
  };

  static KeyValueConfig parse(std::istream& in, const std::string& source);
  static KeyValueConfig parse_string(const std::string& text, const std::string& source = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  // "key=value" from the command line; later overrides win.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value, const std::string& origin = "<api>");

  bool has(const std::string& key) const { return entries_.contains(key); }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  // Throws ConfigError naming the first key not in `known`.
  void reject_unknown(const std::set<std::string>& known) const;
  // "origin: key 'name': message"
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace vibronic
