#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pdv {

struct Variable {
  std::string name;
  auto operator<=>(const Variable&) const = default;
};

/// A bare identifier such as `alice` or `ckd`.
struct Constant {
  std::string name;
  auto operator<=>(const Constant&) const = default;
};

struct StringLit {
  std::string value;
  auto operator<=>(const StringLit&) const = default;
};

struct NumberLit {
  double value = 0.0;
  auto operator<=>(const NumberLit&) const = default;
};

/// Witness for an existential head variable. Identical (rule, frame, position)
/// always denotes the same individual.
struct Skolem {
  std::string rule;
  std::uint64_t frame = 0;
  int position = 0;
  auto operator<=>(const Skolem&) const = default;
};

using Term = std::variant<Variable, Constant, StringLit, NumberLit, Skolem>;

inline bool is_variable(const Term& t) { return std::holds_alternative<Variable>(t); }
inline bool is_skolem(const Term& t) { return std::holds_alternative<Skolem>(t); }

/// Predicate applied to terms. Rules use atoms with variables; facts are ground atoms.
struct Atom {
  std::string predicate;
  std::vector<Term> args;
  auto operator<=>(const Atom&) const = default;
};

using Fact = Atom;

bool is_ground(const Atom& atom);

/// DSL spelling of a term: `?x`, `alice`, `"true"`, `3.5`, `_:rule1/00ab.../0`.
std::string to_string(const Term& term);
std::string to_string(const Atom& atom);

/// Shortest decimal spelling that parses back to the same double.
std::string format_number(double value);

}  // namespace pdv
