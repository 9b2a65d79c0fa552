#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pdv/core/fact.hpp"
#include "pdv/core/types.hpp"
#include "pdv/infer/rules.hpp"

namespace pdv::infer {

inline constexpr int kDefaultMaxDepth = 8;

/// Predicate with equality semantics: once sameAs(a, b) is derived, every other
/// fact is rewritten so the class of a and b is named by one representative
/// (a constant rather than a skolem when the class has one).
inline constexpr const char* kSameAs = "sameAs";

struct Derivation {
  Fact fact;
  std::string rule_id;
  /// Body variables and their values, sorted by variable name.
  std::vector<std::pair<std::string, Term>> binding;
  /// Instantiated body atoms in body order.
  std::vector<Fact> premises;
  /// sameAs facts whose merges rewrote terms of this derivation.
  std::vector<Fact> equalities;
  /// Longest rule chain down to base facts; a rule over base facts has depth 1.
  int depth = 1;
  bool operator==(const Derivation&) const = default;
};

struct Saturation {
  std::set<Fact> facts;
  /// Derived facts only; base facts have no entry.
  std::map<Fact, Derivation> derivations;
  /// Set when max_depth stopped further derivations.
  bool truncated = false;
};

/// Forward chaining to the least fixpoint of `rules` over `base`, keeping
/// only derivations of depth <= max_depth. Rules with fresh variables do not
/// fire on frames that bind any variable to a skolem. The result does not
/// depend on rule or fact order. Throws invalid-argument when max_depth < 1.
Saturation saturate(const std::set<Fact>& base, const RuleSet& rules, int max_depth = kDefaultMaxDepth);

struct ProofTree {
  Fact fact;
  /// Empty for base facts.
  std::string rule_id;
  std::vector<std::pair<std::string, Term>> binding;
  std::vector<Fact> equalities;
  std::vector<ProofTree> premises;

  bool is_base() const { return rule_id.empty(); }
  /// 0 for a base fact, otherwise 1 + deepest premise.
  int depth() const;
};

/// Minimal proof of a derived fact. Throws not-derived for base or unknown facts.
ProofTree explain(const Fact& fact, const Saturation& saturation);

/// Indented text, two spaces per level; stable for equal trees.
std::string render(const ProofTree& tree);

/// Maps derived predicates to the privacy parameter their presence reveals.
using RiskBinding = std::map<std::string, std::string>;

/// Throws invalid-argument when a bound predicate is never derived by `rules`
/// or a parameter is not registered.
void validate_binding(const RiskBinding& binding, const RuleSet& rules,
                      const ParameterRegistry& registry = {});

struct Inference {
  std::set<std::string> parameters;
  /// Derived facts whose predicate is bound to a parameter.
  std::vector<Fact> risk_facts;
  Saturation saturation;
};

/// Saturates context facts plus the release and collects every parameter
/// bound to a derived predicate in the fixpoint.
Inference infer_risks(const std::set<Fact>& release, const ContextState& context, const RuleSet& rules,
                      const RiskBinding& binding, int max_depth = kDefaultMaxDepth);

std::set<std::string> inferable_parameters(const std::set<Fact>& release, const ContextState& context,
                                           const RuleSet& rules, const RiskBinding& binding);

}  // namespace pdv::infer
