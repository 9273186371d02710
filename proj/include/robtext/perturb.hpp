#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "robtext/errors.hpp"
#include "robtext/spec.hpp"
#include "robtext/text.hpp"

namespace robtext {

using BigInt = boost::multiprecision::cpp_int;

// Inclusive 0-based token span; l <= r always holds (patterns are nonempty).
struct Span {
  int l = 0;
  int r = 0;
  bool operator==(const Span&) const = default;
};

struct Match {
  Span span;
  int rule_index = 0;
  bool operator==(const Match&) const = default;
};

// One application: a match plus the chosen replacement. `choice` indexes the
// rule's replacement options for this span.
struct Application {
  Match match;
  int choice = 0;
  TokenString replacement;
};

// A sorted, non-overlapping, budget-respecting set of applications. One plan
// materializes one perturbed string.
struct MatchPlan {
  std::vector<Application> applications;
  bool empty() const { return applications.empty(); }
};

// ---------------------------------------------------------------------------
// Match finding
// ---------------------------------------------------------------------------

// Every (span, rule) pair valid in x, sorted by (l, r, rule_index). Matches
// are reported for all rules, including those with budget 0; budgets apply
// when plans are formed. A positive prefix_len restricts spans to the prefix.
inline std::vector<Match> find_matches(const TransformSpec& spec, const TokenString& x) {
  std::vector<Match> matches;
  const int n = static_cast<int>(x.size());
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < static_cast<int>(spec.rules.size()); ++j) {
      const auto& rule = spec.rules[j].rule;
      const int r = l + static_cast<int>(rule.pattern.size()) - 1;
      if (r >= n) continue;
      if (spec.prefix_len > 0 && r >= spec.prefix_len) continue;
      if (rule_matches_at(rule, *spec.resources, x, l, spec.alphabet))
        matches.push_back({{l, r}, j});
    }
  }
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    return std::tie(a.span.l, a.span.r, a.rule_index) < std::tie(b.span.l, b.span.r, b.rule_index);
  });
  return matches;
}

inline std::vector<TokenString> options_for(const TransformSpec& spec, const TokenString& x,
                                            const Match& m) {
  return replacement_options(spec.rules[m.rule_index].rule, *spec.resources, x,
                             static_cast<size_t>(m.span.l), spec.alphabet);
}

// ---------------------------------------------------------------------------
// Materialization
// ---------------------------------------------------------------------------

namespace detail {

inline void check_plan_shape(const TransformSpec& spec, const MatchPlan& plan) {
  std::vector<int> used(spec.rules.size(), 0);
  int prev_r = -1;
  for (const auto& app : plan.applications) {
    if (app.match.span.l <= prev_r)
      throw ConfigError("invalid plan: overlapping or unsorted matches");
    prev_r = app.match.span.r;
    if (app.match.rule_index < 0 || app.match.rule_index >= static_cast<int>(spec.rules.size()))
      throw ConfigError("invalid plan: rule index out of range");
    if (++used[app.match.rule_index] > spec.rules[app.match.rule_index].budget)
      throw ConfigError("invalid plan: budget exceeded for rule '" +
                        spec.rules[app.match.rule_index].rule.name + "'");
  }
}

}  // namespace detail

// Splices each chosen replacement over its span, left to right; untouched
// positions are preserved verbatim. Overlap and budget violations throw.
inline TokenString materialize(const TransformSpec& spec, const TokenString& x,
                               const MatchPlan& plan) {
  detail::check_plan_shape(spec, plan);
  TokenString out;
  out.reserve(x.size());
  size_t pos = 0;
  for (const auto& app : plan.applications) {
    for (; pos < static_cast<size_t>(app.match.span.l); ++pos) out.push_back(x[pos]);
    for (const auto& t : app.replacement) out.push_back(t);
    pos = static_cast<size_t>(app.match.span.r) + 1;
  }
  for (; pos < x.size(); ++pos) out.push_back(x[pos]);
  return out;
}

// Full membership re-validation: plan shape plus replacement provenance.
// Used to check that attack outputs really are members of the space.
inline bool plan_in_space(const TransformSpec& spec, const TokenString& x,
                          const MatchPlan& plan) {
  try {
    detail::check_plan_shape(spec, plan);
  } catch (const ConfigError&) {
    return false;
  }
  for (const auto& app : plan.applications) {
    const auto& rule = spec.rules[app.match.rule_index].rule;
    const int expect_r = app.match.span.l + static_cast<int>(rule.pattern.size()) - 1;
    if (app.match.span.r != expect_r) return false;
    if (app.match.span.r >= static_cast<int>(x.size())) return false;
    if (spec.prefix_len > 0 && app.match.span.r >= spec.prefix_len) return false;
    if (!rule_matches_at(rule, *spec.resources, x, app.match.span.l, spec.alphabet)) return false;
    const auto opts = options_for(spec, x, app.match);
    bool found = false;
    for (const auto& o : opts) found |= (o == app.replacement);
    if (!found) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Space enumeration
// ---------------------------------------------------------------------------

// Visits every distinct string of S(x) exactly once, starting with x itself
// (the empty plan). Plans are generated in lexicographic order of (match
// positions, replacement index); duplicates are suppressed by string
// equality. The visitor returns false to stop early. Returns true iff the
// space was exhausted.
inline bool enumerate_space(const TransformSpec& spec, const TokenString& x,
                            const std::function<bool(const TokenString&, const MatchPlan&)>& visit) {
  const auto matches = find_matches(spec, x);
  std::vector<std::vector<TokenString>> options(matches.size());
  for (size_t i = 0; i < matches.size(); ++i) options[i] = options_for(spec, x, matches[i]);

  std::unordered_set<std::string> seen;
  std::vector<int> budget(spec.rules.size());
  for (size_t j = 0; j < spec.rules.size(); ++j) budget[j] = spec.rules[j].budget;

  MatchPlan plan;
  auto emit = [&]() -> bool {
    TokenString y = materialize(spec, x, plan);
    if (!seen.insert(token_key(y)).second) return true;
    return visit(y, plan);
  };

  std::function<bool(size_t)> dfs = [&](size_t from) -> bool {
    for (size_t i = from; i < matches.size(); ++i) {
      const int j = matches[i].rule_index;
      if (budget[j] == 0) continue;
      if (!plan.applications.empty() &&
          matches[i].span.l <= plan.applications.back().match.span.r)
        continue;
      --budget[j];
      for (int c = 0; c < static_cast<int>(options[i].size()); ++c) {
        plan.applications.push_back({matches[i], c, options[i][c]});
        if (!emit() || !dfs(i + 1)) {
          plan.applications.pop_back();
          ++budget[j];
          return false;
        }
        plan.applications.pop_back();
      }
      ++budget[j];
    }
    return true;
  };

  if (!emit()) return false;
  return dfs(0);
}

// Collecting convenience; `limit` of 0 means unbounded.
inline std::vector<TokenString> enumerate_space(const TransformSpec& spec, const TokenString& x,
                                                size_t limit = 0) {
  std::vector<TokenString> out;
  enumerate_space(spec, x, [&](const TokenString& y, const MatchPlan&) {
    out.push_back(y);
    return limit == 0 || out.size() < limit;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Plan counting (dynamic programming)
// ---------------------------------------------------------------------------

namespace detail {

struct PlanCounter {
  const std::vector<Match>* matches;
  std::vector<size_t> option_count;
  std::vector<size_t> next;     // first match index starting after span end
  std::vector<int> budgets;     // per-rule budget
  std::vector<uint64_t> radix;  // mixed-radix weights for budget vectors
  size_t max_states;
  std::unordered_map<uint64_t, BigInt> memo;

  uint64_t encode(size_t i, const std::vector<int>& remaining) const {
    uint64_t code = i;
    for (size_t j = 0; j < remaining.size(); ++j)
      code += radix[j] * static_cast<uint64_t>(remaining[j]);
    return code;
  }

  BigInt count(size_t i, std::vector<int>& remaining) {
    if (i == matches->size()) return 1;
    const uint64_t key = encode(i, remaining);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() >= max_states)
      throw BudgetExceeded("plan-count DP exceeded " + std::to_string(max_states) + " states");
    BigInt total = count(i + 1, remaining);
    const int j = (*matches)[i].rule_index;
    if (remaining[j] > 0 && option_count[i] > 0) {
      --remaining[j];
      total += BigInt(option_count[i]) * count(next[i], remaining);
      ++remaining[j];
    }
    memo.emplace(key, total);
    return total;
  }
};

inline PlanCounter make_plan_counter(const TransformSpec& spec, const TokenString& x,
                                     const std::vector<Match>& matches, size_t max_states) {
  PlanCounter pc;
  pc.matches = &matches;
  pc.max_states = max_states;
  pc.option_count.resize(matches.size());
  pc.next.resize(matches.size());
  for (size_t i = 0; i < matches.size(); ++i) {
    pc.option_count[i] = options_for(spec, x, matches[i]).size();
    size_t lo = i + 1;
    while (lo < matches.size() && matches[lo].span.l <= matches[i].span.r) ++lo;
    pc.next[i] = lo;
  }
  pc.budgets.resize(spec.rules.size());
  pc.radix.resize(spec.rules.size());
  uint64_t weight = matches.size() + 1;
  for (size_t j = 0; j < spec.rules.size(); ++j) {
    pc.budgets[j] = spec.rules[j].budget;
    pc.radix[j] = weight;
    weight *= static_cast<uint64_t>(spec.rules[j].budget) + 1;
  }
  return pc;
}

}  // namespace detail

// Number of valid plans (including the empty plan), without enumeration.
// This counts plans, not distinct strings; distinct strings require
// enumerate_space with its dedup. State space is bounded by `max_states`.
inline BigInt count_plans(const TransformSpec& spec, const TokenString& x,
                          size_t max_states = 10'000'000) {
  const auto matches = find_matches(spec, x);
  auto pc = detail::make_plan_counter(spec, x, matches, max_states);
  std::vector<int> remaining = pc.budgets;
  return pc.count(0, remaining);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline BigInt uniform_big(std::mt19937_64& rng, const BigInt& bound) {
  if (bound <= 1) return 0;
  const unsigned bits = boost::multiprecision::msb(bound - 1) + 1;
  while (true) {
    BigInt v = 0;
    for (unsigned got = 0; got < bits; got += 64) {
      v <<= 64;
      v |= BigInt(rng());
    }
    v >>= (64 - bits % 64) % 64;
    if (v < bound) return v;
  }
}

// Decodes the plan with lexicographic rank `rank` using the counting DP.
inline MatchPlan decode_plan(const TransformSpec& spec, const TokenString& x,
                             const std::vector<Match>& matches, PlanCounter& pc, BigInt rank) {
  MatchPlan plan;
  std::vector<int> remaining = pc.budgets;
  size_t i = 0;
  while (i < matches.size()) {
    BigInt skip = pc.count(i + 1, remaining);
    const int j = matches[i].rule_index;
    bool takeable = remaining[j] > 0 && pc.option_count[i] > 0;
    // Rank layout mirrors the DFS order: all plans without match i first.
    if (!takeable || rank < skip) {
      ++i;
      continue;
    }
    rank -= skip;
    --remaining[j];
    BigInt tail = pc.count(pc.next[i], remaining);
    const int choice = static_cast<int>(rank / tail);
    rank %= tail;
    const auto opts = options_for(spec, x, matches[i]);
    plan.applications.push_back({matches[i], choice, opts[static_cast<size_t>(choice)]});
    i = pc.next[i];
  }
  return plan;
}

}  // namespace detail

// One draw from the sequential random-augmentation sampler: for each rule in
// spec order, uniformly pick an element of the current string's single-rule
// space and feed it to the next rule. Spaces small enough to enumerate are
// sampled uniformly over distinct strings; larger ones uniformly over plans.
// Deterministic given the generator state.
inline TokenString sample_sequential(const TransformSpec& spec, const TokenString& x,
                                     std::mt19937_64& rng, size_t enum_limit = 4096) {
  TokenString current = x;
  for (const auto& br : spec.rules) {
    TransformSpec single;
    single.alphabet = spec.alphabet;
    single.prefix_len = spec.prefix_len;
    single.resources = spec.resources;
    single.rules = {br};
    std::vector<TokenString> space;
    bool complete = enumerate_space(single, current, [&](const TokenString& y, const MatchPlan&) {
      space.push_back(y);
      return space.size() <= enum_limit;
    });
    if (complete) {
      std::uniform_int_distribution<size_t> pick(0, space.size() - 1);
      current = space[pick(rng)];
    } else {
      const auto matches = find_matches(single, current);
      auto pc = detail::make_plan_counter(single, current, matches, 10'000'000);
      std::vector<int> remaining = pc.budgets;
      const BigInt total = pc.count(0, remaining);
      const BigInt rank = detail::uniform_big(rng, total);
      current = materialize(single, current, detail::decode_plan(single, current, matches, pc, rank));
    }
  }
  return current;
}

inline TokenString sample_sequential(const TransformSpec& spec, const TokenString& x,
                                     uint64_t seed, size_t enum_limit = 4096) {
  std::mt19937_64 rng(seed);
  return sample_sequential(spec, x, rng, enum_limit);
}

}  // namespace robtext
