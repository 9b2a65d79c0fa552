#include "pdv/core/fact.hpp"

#include <charconv>
#include <cstdio>

namespace pdv {

bool is_ground(const Atom& atom) {
  for (const auto& t : atom.args) {
    if (is_variable(t)) return false;
  }
  return true;
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, end) : std::string("0");
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string to_string(const Term& term) {
  struct Visitor {
    std::string operator()(const Variable& v) const { return "?" + v.name; }
    std::string operator()(const Constant& c) const { return c.name; }
    std::string operator()(const StringLit& s) const { return quote(s.value); }
    std::string operator()(const NumberLit& n) const { return format_number(n.value); }
    std::string operator()(const Skolem& s) const {
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(s.frame));
      return "_:" + s.rule + "/" + hex + "/" + std::to_string(s.position);
    }
  };
  return std::visit(Visitor{}, term);
}

std::string to_string(const Atom& atom) {
  std::string out = atom.predicate + "(";
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ", ";
    out += to_string(atom.args[i]);
  }
  out += ")";
  return out;
}

}  // namespace pdv
