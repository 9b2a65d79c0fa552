#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pdv/core/fact.hpp"

namespace pdv::infer {

/// Horn rule with an optional existential head. Head variables that do not
/// occur in the body must be listed in `fresh_vars`; each firing binds them to
/// a skolem term determined by the rule id and the body frame.
struct Rule {
  std::string id;
  std::vector<Atom> body;
  std::vector<Atom> head;
  std::set<std::string> fresh_vars;
  bool operator==(const Rule&) const = default;
};

struct RuleSet {
  std::vector<Rule> rules;
  bool operator==(const RuleSet&) const = default;

  const Rule* find(std::string_view id) const;
  /// Every predicate that occurs in a rule head.
  std::set<std::string> head_predicates() const;
};

/// Parses the rule language:
///
///     ruleset := rule*
///     rule    := "rule" ident ":" body "=>" head "."
///     body    := atom ("," atom)*
///     head    := atom ("," atom)*
///     atom    := ident "(" term ("," term)* ")"
///     term    := "?" ident | ident | string | number | "fresh" "(" "?" ident ")"
///
/// `#` starts a comment running to the end of the line. The predicate
/// `usesDevice` is read as `useDevice`.
///
/// Throws SyntaxError (line, column, expected), or Error with
/// unbound-head-variable, arity-mismatch or duplicate-rule.
RuleSet parse_rules(std::string_view text);

/// Ground atoms terminated by ".", one or more per line. Skolem terms may be
/// written as `_:rule/<16 hex digits>/<position>`.
std::vector<Fact> parse_facts(std::string_view text);

/// Single ground atom, no terminating ".".
Fact parse_fact(std::string_view text);

std::string print_rule(const Rule& rule);
/// One rule per line; parse_rules(print_rules(r)) == r.
std::string print_rules(const RuleSet& rules);

RuleSet load_rules(const std::string& path);
std::vector<Fact> load_facts(const std::string& path);

}  // namespace pdv::infer
