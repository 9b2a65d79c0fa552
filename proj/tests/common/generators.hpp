#pragma once

// Random instance generators and independent oracles shared by the unit and
// acceptance suites.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pdv/infer/engine.hpp"
#include "pdv/infer/rules.hpp"
#include "pdv/query/query.hpp"

namespace pdv::testing::gen {

using namespace pdv::infer;

// Independent fixpoint: enumerate every assignment of body variables over
// the active domain, derive until nothing changes, then relax minimal depths.
// Only valid for rules without fresh variables or sameAs heads.
struct Oracle {
  std::map<Fact, int> depth;  // 0 for base
  bool truncated = false;
  std::set<Fact> facts;
};

inline void assignments(const Rule& rule, const std::vector<Term>& domain, std::vector<std::string>& vars, std::size_t i,
                 std::map<std::string, Term>& env, const std::function<void()>& visit) {
  if (i == vars.size()) {
    visit();
    return;
  }
  for (const auto& value : domain) {
    env[vars[i]] = value;
    assignments(rule, domain, vars, i + 1, env, visit);
  }
}

inline Fact instantiate(const Atom& a, const std::map<std::string, Term>& env) {
  Fact f{a.predicate, {}};
  for (const auto& t : a.args) {
    if (const auto* v = std::get_if<Variable>(&t)) f.args.push_back(env.at(v->name));
    else f.args.push_back(t);
  }
  return f;
}

inline Oracle brute_force(const std::set<Fact>& base, const RuleSet& rules, int max_depth) {
  std::set<Term> domain_set;
  for (const auto& f : base) domain_set.insert(f.args.begin(), f.args.end());
  for (const auto& r : rules.rules) {
    for (const auto& a : r.head) {
      for (const auto& t : a.args) {
        if (!is_variable(t)) domain_set.insert(t);
      }
    }
  }
  const std::vector<Term> domain(domain_set.begin(), domain_set.end());
  std::map<Fact, int> depth;
  for (const auto& f : base) depth[f] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& rule : rules.rules) {
      std::set<std::string> var_set;
      for (const auto& a : rule.body) {
        for (const auto& t : a.args) {
          if (const auto* v = std::get_if<Variable>(&t)) var_set.insert(v->name);
        }
      }
      std::vector<std::string> vars(var_set.begin(), var_set.end());
      std::map<std::string, Term> env;
      assignments(rule, domain, vars, 0, env, [&] {
        int d = 0;
        for (const auto& a : rule.body) {
          auto it = depth.find(instantiate(a, env));
          if (it == depth.end()) return;
          d = std::max(d, it->second);
        }
        for (const auto& h : rule.head) {
          const Fact f = instantiate(h, env);
          auto it = depth.find(f);
          if (it == depth.end() || it->second > d + 1) {
            depth[f] = d + 1;
            changed = true;
          }
        }
      });
    }
  }
  Oracle out;
  for (const auto& [f, d] : depth) {
    if (d <= max_depth) {
      out.facts.insert(f);
      out.depth[f] = d;
    } else {
      out.truncated = true;
    }
  }
  return out;
}

struct DatalogGen {
  std::mt19937_64 rng;
  explicit DatalogGen(std::uint64_t seed) : rng(seed) {}
  int pick(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

  static std::size_t arity(int predicate) { return predicate < 2 ? 1 : 2; }

  Atom atom(bool allow_fresh, std::vector<std::string>* body_vars, Rule* rule) {
    const int p = pick(5);
    Atom a{"p" + std::to_string(p), {}};
    for (std::size_t k = 0; k < arity(p); ++k) {
      const int c = pick(10);
      if (body_vars && c < 7) {
        body_vars->push_back("x" + std::to_string(pick(3)));
        a.args.push_back(Variable{body_vars->back()});
      } else if (rule && c < 7 && !rule->body.empty()) {
        std::vector<std::string> bound;
        for (const auto& b : rule->body) {
          for (const auto& t : b.args) {
            if (const auto* v = std::get_if<Variable>(&t)) bound.push_back(v->name);
          }
        }
        if (!bound.empty()) a.args.push_back(Variable{bound[pick(static_cast<int>(bound.size()))]});
        else a.args.push_back(Constant{"c" + std::to_string(pick(3))});
      } else if (rule && allow_fresh && c < 8) {
        rule->fresh_vars.insert("n");
        a.args.push_back(Variable{"n"});
      } else {
        a.args.push_back(Constant{"c" + std::to_string(pick(3))});
      }
    }
    return a;
  }

  RuleSet rules(bool allow_fresh) {
    RuleSet out;
    for (int r = 0, n = 1 + pick(5); r < n; ++r) {
      Rule rule;
      rule.id = "g" + std::to_string(r);
      std::vector<std::string> vars;
      for (int i = 0, m = 1 + pick(3); i < m; ++i) rule.body.push_back(atom(false, &vars, nullptr));
      for (int i = 0, m = 1 + pick(2); i < m; ++i) rule.head.push_back(atom(allow_fresh, nullptr, &rule));
      out.rules.push_back(std::move(rule));
    }
    return out;
  }

  std::set<Fact> facts() {
    std::set<Fact> out;
    for (int i = 0, n = pick(12); i < n; ++i) {
      const int p = pick(5);
      Fact f{"p" + std::to_string(p), {}};
      for (std::size_t k = 0; k < arity(p); ++k) f.args.push_back(Constant{"c" + std::to_string(pick(4))});
      out.insert(f);
    }
    return out;
  }
};

struct RuleGen {
  std::mt19937_64 rng;
  explicit RuleGen(std::uint64_t seed) : rng(seed) {}

  int pick(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

  std::string ident(const char* prefix) { return prefix + std::to_string(pick(6)); }

  Term constant_term() {
    switch (pick(3)) {
      case 0: return Constant{ident("c")};
      case 1: {
        static const char* samples[] = {"true", "a b", "quote\"d", "back\\slash", "tab\there", "", "line\nbreak"};
        return StringLit{samples[pick(7)]};
      }
      default: {
        static const double samples[] = {0, 1, -2, 0.5, 3.25e-7, 1e21, 123456.789};
        return NumberLit{samples[pick(7)]};
      }
    }
  }

  RuleSet rules() {
    RuleSet out;
    std::map<std::string, std::size_t> arity;
    const int n = 1 + pick(4);
    for (int r = 0; r < n; ++r) {
      Rule rule;
      rule.id = "r" + std::to_string(r);
      std::vector<std::string> vars;
      auto atom = [&](bool head) {
        Atom a;
        a.predicate = ident("p");
        auto [it, _] = arity.emplace(a.predicate, 1 + pick(3));
        for (std::size_t k = 0; k < it->second; ++k) {
          const int choice = pick(4);
          if (!head && choice < 2) {
            vars.push_back(ident("v"));
            a.args.push_back(Variable{vars.back()});
          } else if (head && choice < 2 && !vars.empty()) {
            a.args.push_back(Variable{vars[pick(static_cast<int>(vars.size()))]});
          } else if (head && choice == 2) {
            const std::string f = "f" + std::to_string(pick(2));
            rule.fresh_vars.insert(f);
            a.args.push_back(Variable{f});
          } else {
            a.args.push_back(constant_term());
          }
        }
        return a;
      };
      for (int i = 0, m = 1 + pick(3); i < m; ++i) rule.body.push_back(atom(false));
      for (int i = 0, m = 1 + pick(3); i < m; ++i) rule.head.push_back(atom(true));
      out.rules.push_back(std::move(rule));
    }
    return out;
  }
};

inline query::Query generated_query(std::mt19937_64& rng) {
  static const char* paths[] = {"energy.consumption", "presence.pir", "a", "water.flow.main", "x_1.y2", "camera"};
  query::Query q;
  std::vector<std::string> pool(std::begin(paths), std::end(paths));
  std::shuffle(pool.begin(), pool.end(), rng);
  q.items.assign(pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 4));
  q.from = Timestamp{std::chrono::milliseconds{static_cast<long long>(rng() % 4'000'000'000'000ULL)}};
  q.to = q.from + std::chrono::milliseconds{static_cast<long long>(rng() % 100'000'000)};
  if (rng() % 2) {
    static const int periods[] = {1, 15, 59, 60, 120, 900, 3600, 5400, 7200, 86400};
    q.sample_period = Duration{periods[rng() % 10]};
  }
  if (rng() % 2) q.noise_epsilon = static_cast<double>(1 + rng() % 100000) / 1000.0;
  if (rng() % 2) {
    static const char* purposes[] = {"billing", "", "ads \"targeted\"", "a\\b", "tab\tand\nnewline"};
    q.purpose = purposes[rng() % 5];
  }
  return q;
}

}  // namespace pdv::testing::gen
