#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "robtext/errors.hpp"
#include "robtext/resources.hpp"
#include "robtext/text.hpp"

namespace robtext {

// ---------------------------------------------------------------------------
// Patterns: a rule matches a fixed-length span of tokens, one predicate per
// position. Fixed lengths keep match enumeration linear in the string.
// ---------------------------------------------------------------------------

enum class PredicateKind { Any, InSet, InClass };

struct TokenPredicate {
  PredicateKind kind = PredicateKind::Any;
  std::set<std::string> tokens;  // InSet
  std::string cls;               // InClass

  static TokenPredicate any() { return {}; }
  static TokenPredicate in_set(std::set<std::string> toks) {
    return {PredicateKind::InSet, std::move(toks), {}};
  }
  static TokenPredicate in_class(std::string name) {
    return {PredicateKind::InClass, {}, std::move(name)};
  }

  bool matches(const std::string& token, const ResourceTables& res) const {
    switch (kind) {
      case PredicateKind::Any: return true;
      case PredicateKind::InSet: return tokens.count(token) > 0;
      case PredicateKind::InClass: return res.in_class(cls, token);
    }
    return false;
  }

  bool operator==(const TokenPredicate&) const = default;
};

using TokenPattern = std::vector<TokenPredicate>;

// ---------------------------------------------------------------------------
// Replacers
// ---------------------------------------------------------------------------

enum class ReplacerKind { Delete, Swap, Substitute, Duplicate, Insert };

inline const char* to_string(ReplacerKind k) {
  switch (k) {
    case ReplacerKind::Delete: return "delete";
    case ReplacerKind::Swap: return "swap";
    case ReplacerKind::Substitute: return "substitute";
    case ReplacerKind::Duplicate: return "duplicate";
    case ReplacerKind::Insert: return "insert";
  }
  return "?";
}

struct Replacer {
  ReplacerKind kind = ReplacerKind::Delete;
  std::string table;  // Substitute / Insert only

  bool operator==(const Replacer&) const = default;
};

struct TransformRule {
  std::string name;
  TokenPattern pattern;
  Replacer replacer;
  std::string builtin;  // nonempty when built from a named built-in

  bool operator==(const TransformRule&) const = default;
};

struct BudgetedRule {
  TransformRule rule;
  int budget = 0;

  bool operator==(const BudgetedRule&) const = default;
};

// The parsed perturbation specification: a set of budgeted rules over one
// alphabet. Immutable after construction; safe to share across threads.
struct TransformSpec {
  Alphabet alphabet = Alphabet::Char;
  std::vector<BudgetedRule> rules;
  int prefix_len = 0;  // >0 restricts matches to spans ending within the prefix
  std::shared_ptr<const ResourceTables> resources = std::make_shared<ResourceTables>();

  size_t size() const { return rules.size(); }

  int total_budget() const {
    int total = 0;
    for (const auto& r : rules) total += r.budget;
    return total;
  }

  bool operator==(const TransformSpec& o) const {
    return alphabet == o.alphabet && rules == o.rules && prefix_len == o.prefix_len;
  }
};

// ---------------------------------------------------------------------------
// Replacement generation
// ---------------------------------------------------------------------------

// Joins a span of tokens into the surface form used as a table key.
inline std::string span_key(const TokenString& tokens, size_t l, size_t len, Alphabet mode) {
  std::string key;
  for (size_t i = 0; i < len; ++i) {
    if (i > 0 && mode == Alphabet::Word) key += ' ';
    key += tokens[l + i];
  }
  return key;
}

// All replacement token sequences the rule can emit for the span starting at
// `l`. Table-backed rules yield entries in table file order; a missing key
// yields the empty list (the span is simply not a match).
inline std::vector<TokenString> replacement_options(const TransformRule& rule,
                                                    const ResourceTables& res,
                                                    const TokenString& tokens, size_t l,
                                                    Alphabet mode) {
  const size_t len = rule.pattern.size();
  std::vector<TokenString> out;
  switch (rule.replacer.kind) {
    case ReplacerKind::Delete:
      out.push_back({});
      break;
    case ReplacerKind::Swap:
      out.push_back({tokens[l + 1], tokens[l]});
      break;
    case ReplacerKind::Duplicate:
      out.push_back({tokens[l], tokens[l]});
      break;
    case ReplacerKind::Substitute: {
      const auto& table = res.table(rule.replacer.table);
      auto it = table.find(span_key(tokens, l, len, mode));
      if (it == table.end()) break;
      for (const auto& value : it->second) out.push_back(tokenize(value, mode));
      break;
    }
    case ReplacerKind::Insert: {
      const auto& table = res.table(rule.replacer.table);
      auto it = table.find(span_key(tokens, l, len, mode));
      if (it == table.end()) break;
      for (const auto& value : it->second) {
        TokenString repl(tokens.begin() + l, tokens.begin() + l + len);
        for (auto& t : tokenize(value, mode)) repl.push_back(std::move(t));
        out.push_back(std::move(repl));
      }
      break;
    }
  }
  return out;
}

// True iff the span starting at `l` is a valid match of the rule: every
// positional predicate holds and the replacer can produce at least one output.
inline bool rule_matches_at(const TransformRule& rule, const ResourceTables& res,
                            const TokenString& tokens, size_t l, Alphabet mode) {
  const size_t len = rule.pattern.size();
  if (l + len > tokens.size()) return false;
  for (size_t i = 0; i < len; ++i)
    if (!rule.pattern[i].matches(tokens[l + i], res)) return false;
  if (rule.replacer.kind == ReplacerKind::Substitute ||
      rule.replacer.kind == ReplacerKind::Insert) {
    const auto& table = res.table(rule.replacer.table);
    if (table.find(span_key(tokens, l, len, mode)) == table.end()) return false;
  }
  return true;
}

// True iff every replacement the rule can ever emit has the same token length
// as its match span. Prerequisite for the convex-hull abstraction.
inline bool is_length_preserving(const TransformRule& rule, const ResourceTables& res,
                                 Alphabet mode) {
  const size_t len = rule.pattern.size();
  switch (rule.replacer.kind) {
    case ReplacerKind::Swap:
      return true;
    case ReplacerKind::Delete:
    case ReplacerKind::Duplicate:
    case ReplacerKind::Insert:
      return false;
    case ReplacerKind::Substitute: {
      for (const auto& [key, values] : res.table(rule.replacer.table)) {
        if (tokenize(key, mode).size() != len) continue;  // key can never match
        for (const auto& value : values)
          if (tokenize(value, mode).size() != len) return false;
      }
      return true;
    }
  }
  return false;
}

inline bool is_length_preserving(const TransformSpec& spec, const TransformRule& rule) {
  return is_length_preserving(rule, *spec.resources, spec.alphabet);
}

// ---------------------------------------------------------------------------
// Built-in rules
// ---------------------------------------------------------------------------

struct BuiltinNames {
  std::string adjacency = "adjacency";
  std::string stop = "stop";
  std::string synonyms = "synonyms";
};

inline TransformRule builtin(const std::string& name, const ResourceTables& res,
                             const BuiltinNames& bind = {}) {
  auto require_table = [&](const std::string& t) {
    if (!res.has_table(t)) throw ConfigError("built-in " + name + " requires table '" + t + "'");
  };
  auto require_class = [&](const std::string& c) {
    if (!res.resolves_class(c)) throw ConfigError("built-in " + name + " requires class '" + c + "'");
  };
  TransformRule rule;
  rule.name = name;
  rule.builtin = name;
  if (name == "SwapPair") {
    rule.pattern = {TokenPredicate::any(), TokenPredicate::any()};
    rule.replacer = {ReplacerKind::Swap, {}};
  } else if (name == "Del") {
    rule.pattern = {TokenPredicate::any()};
    rule.replacer = {ReplacerKind::Delete, {}};
  } else if (name == "InsAdj") {
    require_table(bind.adjacency);
    rule.pattern = {TokenPredicate::in_class(bind.adjacency)};
    rule.replacer = {ReplacerKind::Insert, bind.adjacency};
  } else if (name == "SubAdj") {
    require_table(bind.adjacency);
    rule.pattern = {TokenPredicate::in_class(bind.adjacency)};
    rule.replacer = {ReplacerKind::Substitute, bind.adjacency};
  } else if (name == "DelStop") {
    require_class(bind.stop);
    rule.pattern = {TokenPredicate::in_class(bind.stop)};
    rule.replacer = {ReplacerKind::Delete, {}};
  } else if (name == "Dup") {
    rule.pattern = {TokenPredicate::any()};
    rule.replacer = {ReplacerKind::Duplicate, {}};
  } else if (name == "SubSyn") {
    require_table(bind.synonyms);
    rule.pattern = {TokenPredicate::in_class(bind.synonyms)};
    rule.replacer = {ReplacerKind::Substitute, bind.synonyms};
  } else {
    throw ConfigError("unknown built-in transformation: " + name);
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline size_t token_count(const std::string& s, Alphabet mode) {
  return tokenize(s, mode).size();
}

inline void validate_rule(const TransformRule& rule, const ResourceTables& res,
                          Alphabet mode) {
  const std::string where = "rule '" + rule.name + "': ";
  if (rule.name.empty()) throw ConfigError("rule with empty name");
  if (rule.pattern.empty()) throw ConfigError(where + "pattern must have at least one position");
  switch (rule.replacer.kind) {
    case ReplacerKind::Swap:
      if (rule.pattern.size() != 2) throw ConfigError(where + "swap requires a pattern of length 2");
      break;
    case ReplacerKind::Duplicate:
      if (rule.pattern.size() != 1) throw ConfigError(where + "duplicate requires a pattern of length 1");
      break;
    default:
      break;
  }
  for (const auto& pred : rule.pattern) {
    if (pred.kind != PredicateKind::InClass) continue;
    if (!res.resolves_class(pred.cls)) throw ConfigError(where + "unknown class: " + pred.cls);
    if (res.has_class(pred.cls)) {
      for (const auto& member : res.token_class(pred.cls))
        if (token_count(member, mode) != 1)
          throw ConfigError(where + "mixed alphabet modes: class '" + pred.cls +
                            "' member \"" + member + "\" is not a single " +
                            std::string(to_string(mode)) + " token");
    }
  }
  if (rule.replacer.kind == ReplacerKind::Substitute ||
      rule.replacer.kind == ReplacerKind::Insert) {
    if (!res.has_table(rule.replacer.table))
      throw ConfigError(where + "unknown table: " + rule.replacer.table);
    bool any_key_fits = false;
    for (const auto& [key, values] : res.table(rule.replacer.table))
      any_key_fits |= (token_count(key, mode) == rule.pattern.size());
    if (!any_key_fits)
      throw ConfigError(where + "mixed alphabet modes: no key of table '" + rule.replacer.table +
                        "' spans " + std::to_string(rule.pattern.size()) + " " +
                        std::string(to_string(mode)) + " token(s)");
  }
}

}  // namespace detail

inline void validate_spec(const TransformSpec& spec) {
  if (spec.rules.empty()) throw ConfigError("specification must contain at least one rule");
  if (spec.prefix_len < 0) throw ConfigError("prefix_len must be non-negative");
  std::set<std::string> names;
  for (const auto& br : spec.rules) {
    if (br.budget < 0)
      throw ConfigError("rule '" + br.rule.name + "': budget must be non-negative");
    if (!names.insert(br.rule.name).second)
      throw ConfigError("duplicate rule name: " + br.rule.name);
    detail::validate_rule(br.rule, *spec.resources, spec.alphabet);
  }
}

// ---------------------------------------------------------------------------
// Spec files (JSON)
// ---------------------------------------------------------------------------

namespace detail {

inline TokenPredicate parse_predicate(const nlohmann::json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "any") return TokenPredicate::any();
    throw ConfigError(where + ": unknown predicate \"" + j.get<std::string>() + "\"");
  }
  if (j.is_object()) {
    if (j.contains("any")) return TokenPredicate::any();
    if (j.contains("in")) {
      std::set<std::string> toks;
      for (const auto& t : j.at("in")) toks.insert(t.get<std::string>());
      return TokenPredicate::in_set(std::move(toks));
    }
    if (j.contains("class")) return TokenPredicate::in_class(j.at("class").get<std::string>());
  }
  throw ConfigError(where + ": predicate must be \"any\", {\"in\": [...]}, or {\"class\": ...}");
}

inline ReplacerKind parse_replacer_kind(const std::string& s, const std::string& where) {
  if (s == "delete") return ReplacerKind::Delete;
  if (s == "swap") return ReplacerKind::Swap;
  if (s == "substitute") return ReplacerKind::Substitute;
  if (s == "duplicate") return ReplacerKind::Duplicate;
  if (s == "insert") return ReplacerKind::Insert;
  throw ConfigError(where + ": unknown replacer kind \"" + s + "\"");
}

}  // namespace detail

// Parses spec-file contents against already-loaded resources. The file's
// `resources` section lists paths and is handled by load_spec_file; it is
// ignored here.
inline TransformSpec parse_spec(const std::string& text,
                                std::shared_ptr<const ResourceTables> resources) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("spec syntax error: ") + e.what());
  }
  TransformSpec spec;
  spec.resources = std::move(resources);
  try {
    const std::string alpha = doc.at("alphabet").get<std::string>();
    if (alpha == "char")
      spec.alphabet = Alphabet::Char;
    else if (alpha == "word")
      spec.alphabet = Alphabet::Word;
    else
      throw ConfigError("alphabet must be \"char\" or \"word\", got \"" + alpha + "\"");
    spec.prefix_len = doc.value("prefix_len", 0);
    if (!doc.contains("rules") || !doc.at("rules").is_array())
      throw ConfigError("spec requires a \"rules\" array");
    for (const auto& jr : doc.at("rules")) {
      BudgetedRule br;
      if (!jr.contains("delta")) throw ConfigError("rule is missing \"delta\"");
      if (jr.at("delta").is_number() && jr.at("delta").get<double>() < 0)
        throw ConfigError("rule '" + jr.value("name", std::string("?")) + "': budget must be non-negative");
      br.budget = jr.at("delta").get<int>();
      if (jr.contains("builtin")) {
        BuiltinNames bind;
        if (jr.contains("table")) {
          bind.adjacency = jr.at("table").get<std::string>();
          bind.synonyms = bind.adjacency;
        }
        if (jr.contains("class")) bind.stop = jr.at("class").get<std::string>();
        br.rule = builtin(jr.at("builtin").get<std::string>(), *spec.resources, bind);
        if (jr.contains("name")) br.rule.name = jr.at("name").get<std::string>();
      } else {
        br.rule.name = jr.at("name").get<std::string>();
        const std::string where = "rule '" + br.rule.name + "'";
        for (const auto& jp : jr.at("pattern"))
          br.rule.pattern.push_back(detail::parse_predicate(jp, where));
        const auto& jrep = jr.at("replacer");
        br.rule.replacer.kind =
            detail::parse_replacer_kind(jrep.at("kind").get<std::string>(), where);
        if (jrep.contains("table")) br.rule.replacer.table = jrep.at("table").get<std::string>();
      }
      spec.rules.push_back(std::move(br));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("spec schema error: ") + e.what());
  }
  validate_spec(spec);
  return spec;
}

// Serializes a spec back to its file form; parse_spec(print_spec(s)) == s.
inline std::string print_spec(const TransformSpec& spec) {
  nlohmann::json doc;
  doc["alphabet"] = to_string(spec.alphabet);
  if (spec.prefix_len > 0) doc["prefix_len"] = spec.prefix_len;
  doc["rules"] = nlohmann::json::array();
  for (const auto& br : spec.rules) {
    nlohmann::json jr;
    jr["name"] = br.rule.name;
    jr["delta"] = br.budget;
    if (!br.rule.builtin.empty()) {
      jr["builtin"] = br.rule.builtin;
      if (!br.rule.replacer.table.empty()) jr["table"] = br.rule.replacer.table;
      for (const auto& pred : br.rule.pattern)
        if (pred.kind == PredicateKind::InClass) jr["class"] = pred.cls;
    } else {
      jr["pattern"] = nlohmann::json::array();
      for (const auto& pred : br.rule.pattern) {
        switch (pred.kind) {
          case PredicateKind::Any: jr["pattern"].push_back("any"); break;
          case PredicateKind::InSet:
            jr["pattern"].push_back({{"in", pred.tokens}});
            break;
          case PredicateKind::InClass:
            jr["pattern"].push_back({{"class", pred.cls}});
            break;
        }
      }
      jr["replacer"]["kind"] = to_string(br.rule.replacer.kind);
      if (!br.rule.replacer.table.empty()) jr["replacer"]["table"] = br.rule.replacer.table;
    }
    doc["rules"].push_back(std::move(jr));
  }
  return doc.dump(2);
}

// Loads a spec file together with the resource files its `resources` section
// names (paths resolved relative to the spec file). `extra` entries are merged
// on top and may override.
inline TransformSpec load_spec_file(const std::string& path,
                                    const ResourceTables& extra = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open spec file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": spec syntax error: " + e.what());
  }
  auto res = std::make_shared<ResourceTables>();
  const auto base = std::filesystem::path(path).parent_path();
  if (doc.contains("resources")) {
    const auto& jres = doc.at("resources");
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    if (jres.contains("tables"))
      for (const auto& [name, p] : jres.at("tables").items())
        res->tables[name] = load_table(resolve(p.get<std::string>()));
    if (jres.contains("classes"))
      for (const auto& [name, p] : jres.at("classes").items())
        res->classes[name] = load_class(resolve(p.get<std::string>()));
  }
  for (const auto& [name, table] : extra.tables) res->tables[name] = table;
  for (const auto& [name, cls] : extra.classes) res->classes[name] = cls;
  return parse_spec(text, std::move(res));
}

}  // namespace robtext
