#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "blur2vid/core/error.hpp"
#include "blur2vid/util/hash.hpp"

namespace blur2vid::util {

// Sectioned key/value configuration:
//
//   [train]
//   lr = 1e-4
//   decay_epochs = 40,60
//
// Lookups fall back to the supplied default and every resolved value is
// recorded, so resolved() echoes the full effective configuration
// (defaults + file + overrides) of a run.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return from_string(buf.str(), path.string());
  }

  static Config from_string(const std::string& text, const std::string& origin = "<string>") {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw validation_error(origin + ":" + std::to_string(line_no) + ": malformed section");
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw validation_error(origin + ":" + std::to_string(line_no) + ": expected key = value");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty())
        throw validation_error(origin + ":" + std::to_string(line_no) + ": empty key");
      cfg.values_[section][key] = value;
    }
    return cfg;
  }

  // Applies a "section.key=value" override, as passed on the CLI.
  void apply_override(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw validation_error("override must look like section.key=value: " + spec);
    const std::string path = trim(spec.substr(0, eq));
    const auto dot = path.find('.');
    if (dot == std::string::npos)
      throw validation_error("override key must be section.key: " + spec);
    values_[trim(path.substr(0, dot))][trim(path.substr(dot + 1))] = trim(spec.substr(eq + 1));
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& def) const {
    std::string v = def;
    if (has(section, key)) v = values_.at(section).at(key);
    resolved_[section][key] = v;
    return v;
  }

  int get_int(const std::string& section, const std::string& key, int def) const {
    return static_cast<int>(get_ll(section, key, def));
  }

  long long get_ll(const std::string& section, const std::string& key, long long def) const {
    const std::string v = get_string(section, key, std::to_string(def));
    try {
      size_t pos = 0;
      const long long r = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw validation_error("config " + section + "." + key + ": not an integer: " + v);
    }
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t def) const {
    return static_cast<std::uint64_t>(get_ll(section, key, static_cast<long long>(def)));
  }

  double get_double(const std::string& section, const std::string& key, double def) const {
    std::ostringstream d;
    d << def;
    const std::string v = get_string(section, key, d.str());
    try {
      size_t pos = 0;
      const double r = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw validation_error("config " + section + "." + key + ": not a number: " + v);
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool def) const {
    const std::string v = get_string(section, key, def ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw validation_error("config " + section + "." + key + ": not a boolean: " + v);
  }

  std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                const std::vector<int>& def) const {
    std::ostringstream d;
    for (size_t i = 0; i < def.size(); ++i) d << (i ? "," : "") << def[i];
    const std::string v = get_string(section, key, d.str());
    std::vector<int> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        out.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw validation_error("config " + section + "." + key + ": bad list entry: " + item);
      }
    }
    return out;
  }

  // Serialized snapshot of every value a run actually consumed.
  std::string resolved_ini() const {
    std::ostringstream os;
    for (const auto& [section, keys] : resolved_) {
      os << "[" << section << "]\n";
      for (const auto& [k, v] : keys) os << k << " = " << v << "\n";
      os << "\n";
    }
    return os.str();
  }

  void write_resolved(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw validation_error("cannot write resolved config: " + path.string());
    os << resolved_ini();
  }

  std::uint64_t resolved_hash() const { return fnv1a(resolved_ini()); }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::map<std::string, std::map<std::string, std::string>> resolved_;
};

}  // namespace blur2vid::util
