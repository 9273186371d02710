#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "robtext/errors.hpp"
#include "robtext/text.hpp"

namespace robtext {

// A substitution table maps a key string to an ordered list of replacement
// strings. File order is preserved so replacement choices enumerate
// deterministically.
using SubstTable = std::map<std::string, std::vector<std::string>>;

// Named substitution tables and token classes, immutable once loaded.
// Tables are open: a token without an entry simply yields no matches.
struct ResourceTables {
  std::map<std::string, SubstTable> tables;
  std::map<std::string, std::set<std::string>> classes;

  bool has_table(const std::string& name) const { return tables.count(name) > 0; }
  bool has_class(const std::string& name) const { return classes.count(name) > 0; }

  const SubstTable& table(const std::string& name) const {
    auto it = tables.find(name);
    if (it == tables.end()) throw ConfigError("unknown table: " + name);
    return it->second;
  }

  const std::set<std::string>& token_class(const std::string& name) const {
    auto it = classes.find(name);
    if (it == classes.end()) throw ConfigError("unknown class: " + name);
    return it->second;
  }

  // Class membership used by pattern predicates. A table name doubles as a
  // class naming its key set, so "token has an adjacency entry" is just a
  // class test. "vowel" falls back to aeiou when no file overrides it.
  bool in_class(const std::string& name, const std::string& token) const {
    if (auto it = classes.find(name); it != classes.end()) return it->second.count(token) > 0;
    if (auto it = tables.find(name); it != tables.end()) return it->second.count(token) > 0;
    if (name == "vowel") return token.size() == 1 && std::string("aeiou").find(token[0]) != std::string::npos;
    throw ConfigError("unknown class: " + name);
  }

  bool resolves_class(const std::string& name) const {
    return has_class(name) || has_table(name) || name == "vowel";
  }
};

// Table file: one entry per line, `key<TAB>value1,value2,...`. Blank lines
// and lines starting with '#' are skipped. Duplicate keys merge; duplicate
// values keep their first position.
inline SubstTable parse_table(std::istream& in, const std::string& origin) {
  SubstTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected key<TAB>values");
    std::string key = line.substr(0, tab);
    auto& values = table[key];
    std::stringstream rest(line.substr(tab + 1));
    std::string value;
    while (std::getline(rest, value, ',')) {
      if (value.empty()) continue;
      bool seen = false;
      for (const auto& v : values) seen |= (v == value);
      if (!seen) values.push_back(value);
    }
    if (values.empty())
      throw DataError(origin + ":" + std::to_string(lineno) + ": key with no values");
  }
  return table;
}

inline SubstTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open table file: " + path);
  return parse_table(in, path);
}

// Class file: one token per line.
inline std::set<std::string> parse_class(std::istream& in) {
  std::set<std::string> cls;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    cls.insert(line);
  }
  return cls;
}

inline std::set<std::string> load_class(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open class file: " + path);
  return parse_class(in);
}

}  // namespace robtext
