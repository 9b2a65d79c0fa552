#include "pdv/infer/engine.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <tuple>

#include "pdv/core/error.hpp"

namespace pdv::infer {
namespace {

using Binding = std::vector<std::pair<std::string, Term>>;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool is_same_as(const Fact& f) { return f.predicate == kSameAs && f.args.size() == 2; }

const Term* lookup(const Binding& b, const std::string& name) {
  for (const auto& [k, v] : b) {
    if (k == name) return &v;
  }
  return nullptr;
}

struct Entry {
  int depth = 0;
  std::optional<Derivation> derivation;
};

/// Orders competing derivations of one fact; the smallest wins.
bool better(const Derivation& a, const Derivation& b) {
  return std::tie(a.depth, a.rule_id, a.binding, a.premises) < std::tie(b.depth, b.rule_id, b.binding, b.premises);
}

class Equalities {
 public:
  const Term& find(const Term& t) const {
    const Term* cur = &t;
    for (;;) {
      auto it = parent_.find(*cur);
      if (it == parent_.end() || it->second == *cur) return *cur;
      cur = &it->second;
    }
  }

  /// Returns true when the classes were distinct.
  bool unite(const Term& a, const Term& b, const Fact& reason) {
    const Term ra = find(a);
    const Term rb = find(b);
    if (ra == rb) return false;
    // Constants name the class in preference to skolems, then term order.
    auto key = [](const Term& t) { return std::make_pair(is_skolem(t), t); };
    const bool a_wins = key(ra) < key(rb);
    const Term& rep = a_wins ? ra : rb;
    const Term& other = a_wins ? rb : ra;
    parent_[other] = rep;
    reasons_[other].push_back(reason);
    return true;
  }

  Fact canonical(const Fact& f) const {
    if (is_same_as(f)) return f;
    Fact out = f;
    for (auto& t : out.args) t = find(t);
    return out;
  }

  /// sameAs facts involved in renaming any argument of `f`.
  void collect_reasons(const Fact& f, std::vector<Fact>& out) const {
    for (const auto& t : f.args) {
      const Term* cur = &t;
      for (;;) {
        auto r = reasons_.find(*cur);
        if (r != reasons_.end()) {
          for (const auto& reason : r->second) {
            if (std::find(out.begin(), out.end(), reason) == out.end()) out.push_back(reason);
          }
        }
        auto it = parent_.find(*cur);
        if (it == parent_.end() || it->second == *cur) break;
        cur = &it->second;
      }
    }
  }

  bool empty() const { return parent_.empty(); }

 private:
  std::map<Term, Term> parent_;
  std::map<Term, std::vector<Fact>> reasons_;
};

class Saturator {
 public:
  Saturator(const RuleSet& rules, int max_depth) : rules_(rules), max_depth_(max_depth) {}

  Saturation run(const std::set<Fact>& base) {
    for (const auto& f : base) {
      if (!is_ground(f)) throw Error(Errc::invalid_argument, "base fact is not ground: " + to_string(f));
      facts_.emplace(f, Entry{});
    }
    for (;;) {
      rebuild_index();
      std::map<Fact, Derivation> candidates;
      for (const auto& rule : rules_.rules) fire(rule, candidates);
      if (candidates.empty()) break;
      bool merged = false;
      for (auto& [fact, d] : candidates) {
        if (is_same_as(fact) && equalities_.unite(fact.args[0], fact.args[1], fact)) merged = true;
        facts_.emplace(fact, Entry{d.depth, std::move(d)});
      }
      if (merged) canonicalize();
    }
    Saturation out;
    for (const auto& f : too_deep_) {
      if (!facts_.count(equalities_.canonical(f))) out.truncated = true;
    }
    for (auto& [fact, entry] : facts_) {
      out.facts.insert(fact);
      if (entry.derivation) out.derivations.emplace(fact, std::move(*entry.derivation));
    }
    return out;
  }

 private:
  void rebuild_index() {
    index_.clear();
    for (const auto& [fact, entry] : facts_) index_[fact.predicate].push_back(&fact);
  }

  void fire(const Rule& rule, std::map<Fact, Derivation>& candidates) {
    Binding binding;
    std::vector<const Fact*> premises;
    match(rule, 0, binding, premises, candidates);
  }

  void match(const Rule& rule, std::size_t i, Binding& binding, std::vector<const Fact*>& premises,
             std::map<Fact, Derivation>& candidates) {
    if (i == rule.body.size()) {
      emit(rule, binding, premises, candidates);
      return;
    }
    const Atom& pattern = rule.body[i];
    auto it = index_.find(pattern.predicate);
    if (it == index_.end()) return;
    for (const Fact* fact : it->second) {
      if (fact->args.size() != pattern.args.size()) continue;
      const std::size_t mark = binding.size();
      bool ok = true;
      for (std::size_t k = 0; k < pattern.args.size() && ok; ++k) {
        const Term& p = pattern.args[k];
        const Term& v = fact->args[k];
        if (const auto* var = std::get_if<Variable>(&p)) {
          if (const Term* bound = lookup(binding, var->name)) ok = *bound == v;
          else binding.emplace_back(var->name, v);
        } else {
          ok = p == v;
        }
      }
      if (ok) {
        premises.push_back(fact);
        match(rule, i + 1, binding, premises, candidates);
        premises.pop_back();
      }
      binding.resize(mark);
    }
  }

  void emit(const Rule& rule, const Binding& binding, const std::vector<const Fact*>& premises,
            std::map<Fact, Derivation>& candidates) {
    Binding frame = binding;
    std::sort(frame.begin(), frame.end());
    if (!rule.fresh_vars.empty()) {
      for (const auto& [name, value] : frame) {
        if (is_skolem(value)) return;
      }
    }
    int depth = 0;
    for (const Fact* p : premises) depth = std::max(depth, facts_.at(*p).depth);
    depth += 1;

    Binding full = frame;
    if (!rule.fresh_vars.empty()) {
      std::string key = rule.id + "|";
      for (const auto& [name, value] : frame) key += name + "=" + to_string(value) + ";";
      const std::uint64_t hash = fnv1a(key);
      int position = 0;
      for (const auto& name : rule.fresh_vars) full.emplace_back(name, Skolem{rule.id, hash, position++});
    }

    for (const Atom& h : rule.head) {
      Fact fact;
      fact.predicate = h.predicate;
      for (const Term& t : h.args) {
        if (const auto* v = std::get_if<Variable>(&t)) fact.args.push_back(*lookup(full, v->name));
        else fact.args.push_back(t);
      }
      fact = equalities_.canonical(fact);
      if (is_same_as(fact) && equalities_.find(fact.args[0]) == equalities_.find(fact.args[1])) continue;
      if (facts_.count(fact)) continue;
      if (depth > max_depth_) {
        too_deep_.insert(fact);
        continue;
      }
      Derivation d;
      d.fact = fact;
      d.rule_id = rule.id;
      d.binding = frame;
      for (const Fact* p : premises) d.premises.push_back(*p);
      d.depth = depth;
      auto [it, inserted] = candidates.emplace(fact, d);
      if (!inserted && better(d, it->second)) it->second = std::move(d);
    }
  }

  void canonicalize() {
    std::map<Fact, Entry> next;
    for (auto& [fact, entry] : facts_) {
      Fact canon = equalities_.canonical(fact);
      if (canon != fact && entry.derivation) {
        Derivation& d = *entry.derivation;
        equalities_.collect_reasons(fact, d.equalities);
        d.fact = canon;
        for (auto& [name, value] : d.binding) value = equalities_.find(value);
        for (auto& p : d.premises) p = equalities_.canonical(p);
      } else if (entry.derivation) {
        for (auto& p : entry.derivation->premises) {
          Fact cp = equalities_.canonical(p);
          if (cp != p) {
            equalities_.collect_reasons(p, entry.derivation->equalities);
            p = std::move(cp);
          }
        }
      }
      auto it = next.find(canon);
      if (it == next.end()) {
        next.emplace(std::move(canon), std::move(entry));
        continue;
      }
      // Two facts collapsed into one: keep base status or the better derivation.
      Entry& kept = it->second;
      if (!kept.derivation) continue;
      if (!entry.derivation || entry.depth < kept.depth ||
          (entry.depth == kept.depth && better(*entry.derivation, *kept.derivation))) {
        kept = std::move(entry);
      }
    }
    facts_ = std::move(next);
  }

  const RuleSet& rules_;
  int max_depth_;
  std::set<Fact> too_deep_;
  std::map<Fact, Entry> facts_;
  std::map<std::string, std::vector<const Fact*>> index_;
  Equalities equalities_;
};

}  // namespace

Saturation saturate(const std::set<Fact>& base, const RuleSet& rules, int max_depth) {
  if (max_depth < 1) throw Error(Errc::invalid_argument, "max_depth must be at least 1");
  return Saturator(rules, max_depth).run(base);
}

int ProofTree::depth() const {
  if (is_base()) return 0;
  int deepest = 0;
  for (const auto& p : premises) deepest = std::max(deepest, p.depth());
  return deepest + 1;
}

namespace {

ProofTree build(const Fact& fact, const Saturation& s) {
  ProofTree tree;
  tree.fact = fact;
  auto it = s.derivations.find(fact);
  if (it == s.derivations.end()) return tree;
  const Derivation& d = it->second;
  tree.rule_id = d.rule_id;
  tree.binding = d.binding;
  tree.equalities = d.equalities;
  for (const auto& p : d.premises) tree.premises.push_back(build(p, s));
  return tree;
}

void render_into(const ProofTree& t, int indent, std::string& out) {
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  out += to_string(t.fact);
  if (t.is_base()) {
    out += "  [base]\n";
    return;
  }
  out += "  [" + t.rule_id;
  if (!t.binding.empty()) {
    out += " {";
    for (std::size_t i = 0; i < t.binding.size(); ++i) {
      if (i) out += ", ";
      out += "?" + t.binding[i].first + "=" + to_string(t.binding[i].second);
    }
    out += "}";
  }
  for (const auto& e : t.equalities) out += "; via " + to_string(e);
  out += "]\n";
  for (const auto& p : t.premises) render_into(p, indent + 1, out);
}

}  // namespace

ProofTree explain(const Fact& fact, const Saturation& saturation) {
  if (!saturation.derivations.count(fact)) {
    throw Error(Errc::not_derived, to_string(fact) + (saturation.facts.count(fact) ? " is a base fact" : " is not in the fixpoint"));
  }
  return build(fact, saturation);
}

std::string render(const ProofTree& tree) {
  std::string out;
  render_into(tree, 0, out);
  return out;
}

void validate_binding(const RiskBinding& binding, const RuleSet& rules, const ParameterRegistry& registry) {
  const auto derivable = rules.head_predicates();
  for (const auto& [predicate, parameter] : binding) {
    if (!derivable.count(predicate)) {
      throw Error(Errc::invalid_argument, "risk binding for '" + predicate + "' which no rule derives");
    }
    if (!registry.contains(parameter)) throw Error(Errc::unknown_parameter, parameter);
  }
}

Inference infer_risks(const std::set<Fact>& release, const ContextState& context, const RuleSet& rules,
                      const RiskBinding& binding, int max_depth) {
  std::set<Fact> base = context.active_facts;
  base.insert(release.begin(), release.end());
  Inference out;
  out.saturation = saturate(base, rules, max_depth);
  for (const auto& [fact, d] : out.saturation.derivations) {
    auto it = binding.find(fact.predicate);
    if (it == binding.end()) continue;
    out.parameters.insert(it->second);
    out.risk_facts.push_back(fact);
  }
  return out;
}

std::set<std::string> inferable_parameters(const std::set<Fact>& release, const ContextState& context,
                                           const RuleSet& rules, const RiskBinding& binding) {
  return infer_risks(release, context, rules, binding).parameters;
}

}  // namespace pdv::infer
