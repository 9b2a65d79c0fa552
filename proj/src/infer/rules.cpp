#include "pdv/infer/rules.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "pdv/core/error.hpp"

namespace pdv::infer {

const Rule* RuleSet::find(std::string_view id) const {
  for (const auto& r : rules) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::set<std::string> RuleSet::head_predicates() const {
  std::set<std::string> out;
  for (const auto& r : rules) {
    for (const auto& a : r.head) out.insert(a.predicate);
  }
  return out;
}

namespace {

enum class Tok { ident, var, string, number, skolem, lparen, rparen, comma, colon, dot, arrow, end };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  Skolem skolem;
  int line = 1;
  int col = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::ident: return "identifier '" + t.text + "'";
    case Tok::var: return "variable '?" + t.text + "'";
    case Tok::string: return "string";
    case Tok::number: return "number";
    case Tok::skolem: return "skolem term";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::colon: return "':'";
    case Tok::dot: return "'.'";
    case Tok::arrow: return "'=>'";
    case Tok::end: return "end of input";
  }
  return "token";
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (c == '_' && pos_ + 1 < src_.size() && src_[pos_ + 1] == ':') {
        t.kind = Tok::skolem;
        t.skolem = take_skolem(t.line, t.col);
      } else if (ident_start(c)) {
        t.kind = Tok::ident;
        t.text = take_ident();
      } else if (c == '?') {
        advance();
        if (pos_ >= src_.size() || !ident_start(src_[pos_])) {
          throw SyntaxError(line_, col_, "variable name", found_here());
        }
        t.kind = Tok::var;
        t.text = take_ident();
      } else if (c == '"') {
        t.kind = Tok::string;
        t.text = take_string(t.line, t.col);
      } else if (digit(c) || (c == '-' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
        t.kind = Tok::number;
        t.number = take_number(t.text);
      } else if (c == '=' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        t.kind = Tok::arrow;
        advance();
        advance();
      } else {
        switch (c) {
          case '(': t.kind = Tok::lparen; break;
          case ')': t.kind = Tok::rparen; break;
          case ',': t.kind = Tok::comma; break;
          case ':': t.kind = Tok::colon; break;
          case '.': t.kind = Tok::dot; break;
          default: throw SyntaxError(line_, col_, "token", found_here());
        }
        advance();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  std::string found_here() const {
    if (pos_ >= src_.size()) return "end of input";
    return "'" + std::string(1, src_[pos_]) + "'";
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string take_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string take_string(int line, int col) {
    advance();  // opening quote
    std::string out;
    for (;;) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') throw SyntaxError(line, col, "closing '\"'", "end of line");
      const char c = src_[pos_];
      if (c == '"') {
        advance();
        return out;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= src_.size()) throw SyntaxError(line_, col_, "escape character", "end of input");
        switch (src_[pos_]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: throw SyntaxError(line_, col_, "escape character", found_here());
        }
        advance();
        continue;
      }
      out += c;
      advance();
    }
  }

  double take_number(std::string& text) {
    const std::size_t start = pos_;
    if (src_[pos_] == '-') advance();
    while (pos_ < src_.size() && digit(src_[pos_])) advance();
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && digit(src_[pos_ + 1])) {
      advance();
      while (pos_ < src_.size() && digit(src_[pos_])) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && digit(src_[look])) {
        while (pos_ < look) advance();
        while (pos_ < src_.size() && digit(src_[pos_])) advance();
      }
    }
    text = std::string(src_.substr(start, pos_ - start));
    double value = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), value);
    return value;
  }

  Skolem take_skolem(int line, int col) {
    advance();
    advance();  // "_:"
    Skolem s;
    if (pos_ >= src_.size() || !ident_start(src_[pos_])) throw SyntaxError(line_, col_, "rule id", found_here());
    s.rule = take_ident();
    if (pos_ >= src_.size() || src_[pos_] != '/') throw SyntaxError(line_, col_, "'/'", found_here());
    advance();
    const std::size_t hex_start = pos_;
    while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (pos_ - hex_start != 16) throw SyntaxError(line, col, "16 hex digit skolem frame", "malformed skolem");
    s.frame = std::strtoull(std::string(src_.substr(hex_start, 16)).c_str(), nullptr, 16);
    if (pos_ >= src_.size() || src_[pos_] != '/') throw SyntaxError(line_, col_, "'/'", found_here());
    advance();
    const std::size_t pos_start = pos_;
    while (pos_ < src_.size() && digit(src_[pos_])) advance();
    if (pos_ == pos_start) throw SyntaxError(line_, col_, "skolem position", found_here());
    s.position = std::atoi(std::string(src_.substr(pos_start, pos_ - pos_start)).c_str());
    return s;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string normalize_predicate(std::string name) {
  return name == "usesDevice" ? "useDevice" : name;
}

enum class Context { body, head, fact };

struct Located {
  int line;
  int col;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(Lexer(src).run()) {}

  RuleSet rules() {
    RuleSet out;
    std::map<std::string, Located> ids;
    while (peek().kind != Tok::end) {
      const Token& kw = peek();
      if (kw.kind != Tok::ident || kw.text != "rule") throw SyntaxError(kw.line, kw.col, "'rule'", describe(kw));
      next();
      const Token id = expect(Tok::ident, "rule identifier");
      if (ids.count(id.text)) {
        throw LocatedError(Errc::duplicate_rule, id.line, id.col, "rule '" + id.text + "' defined twice");
      }
      ids.emplace(id.text, Located{id.line, id.col});
      expect(Tok::colon, "':'");
      Rule rule;
      rule.id = id.text;
      fresh_.clear();
      in_head_ = false;
      rule.body = atoms(Context::body);
      expect(Tok::arrow, "'=>' or ','");
      in_head_ = true;
      rule.head = atoms(Context::head);
      expect(Tok::dot, "'.' or ','");
      rule.fresh_vars = fresh_;
      check_head(rule);
      out.rules.push_back(std::move(rule));
    }
    return out;
  }

  std::vector<Fact> facts() {
    std::vector<Fact> out;
    while (peek().kind != Tok::end) {
      out.push_back(atom(Context::fact));
      expect(Tok::dot, "'.'");
    }
    return out;
  }

  Fact single_fact() {
    Fact f = atom(Context::fact);
    const Token& t = peek();
    if (t.kind != Tok::end) throw SyntaxError(t.line, t.col, "end of input", describe(t));
    return f;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  Token expect(Tok kind, const char* what) {
    const Token& t = peek();
    if (t.kind != kind) throw SyntaxError(t.line, t.col, what, describe(t));
    return next();
  }

  std::vector<Atom> atoms(Context ctx) {
    std::vector<Atom> out;
    out.push_back(atom(ctx));
    while (peek().kind == Tok::comma) {
      next();
      out.push_back(atom(ctx));
    }
    return out;
  }

  Atom atom(Context ctx) {
    const Token name = expect(Tok::ident, "predicate name");
    Atom a;
    a.predicate = normalize_predicate(name.text);
    expect(Tok::lparen, "'('");
    a.args.push_back(term(ctx));
    while (peek().kind == Tok::comma) {
      next();
      a.args.push_back(term(ctx));
    }
    expect(Tok::rparen, "',' or ')'");
    check_arity(a, name);
    return a;
  }

  Term term(Context ctx) {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::var: {
        if (ctx == Context::fact) throw SyntaxError(t.line, t.col, "ground term", describe(t));
        note_var(t);
        return Variable{next().text};
      }
      case Tok::string: return StringLit{next().text};
      case Tok::number: return NumberLit{next().number};
      case Tok::skolem:
        if (ctx != Context::fact) throw SyntaxError(t.line, t.col, "term", describe(t));
        return next().skolem;
      case Tok::ident: {
        if (t.text == "fresh" && tokens_[pos_ + 1].kind == Tok::lparen) {
          if (ctx != Context::head) {
            throw SyntaxError(t.line, t.col, ctx == Context::body ? "body term (fresh is head-only)" : "ground term",
                              "'fresh'");
          }
          next();
          next();
          const Token v = expect(Tok::var, "variable");
          expect(Tok::rparen, "')'");
          if (body_vars_.count(v.text)) {
            throw SyntaxError(v.line, v.col, "variable not bound in the body", "'?" + v.text + "'");
          }
          fresh_.insert(v.text);
          note_var(v);
          return Variable{v.text};
        }
        return Constant{next().text};
      }
      default: throw SyntaxError(t.line, t.col, "term", describe(t));
    }
  }

  void note_var(const Token& t) {
    if (in_head_) head_use_.emplace(t.text, Located{t.line, t.col});
    else body_vars_.insert(t.text);
  }

  void check_arity(const Atom& a, const Token& at) {
    auto [it, inserted] = arity_.emplace(a.predicate, a.args.size());
    if (!inserted && it->second != a.args.size()) {
      throw LocatedError(Errc::arity_mismatch, at.line, at.col,
                         a.predicate + " used with " + std::to_string(a.args.size()) + " arguments, previously " +
                             std::to_string(it->second));
    }
  }

  void check_head(const Rule& rule) {
    std::set<std::string> bound;
    for (const auto& a : rule.body) {
      for (const auto& t : a.args) {
        if (auto* v = std::get_if<Variable>(&t)) bound.insert(v->name);
      }
    }
    for (const auto& a : rule.head) {
      for (const auto& t : a.args) {
        const auto* v = std::get_if<Variable>(&t);
        if (!v || bound.count(v->name) || rule.fresh_vars.count(v->name)) continue;
        const Located loc = head_use_.count(v->name) ? head_use_.at(v->name) : Located{0, 0};
        throw LocatedError(Errc::unbound_head_variable, loc.line, loc.col,
                           "rule " + rule.id + ": ?" + v->name + " is neither bound in the body nor fresh");
      }
    }
    body_vars_.clear();
    head_use_.clear();
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t> arity_;
  std::set<std::string> fresh_;
  std::set<std::string> body_vars_;
  std::map<std::string, Located> head_use_;
  bool in_head_ = false;
};

}  // namespace

RuleSet parse_rules(std::string_view text) { return Parser(text).rules(); }

std::vector<Fact> parse_facts(std::string_view text) { return Parser(text).facts(); }

Fact parse_fact(std::string_view text) { return Parser(text).single_fact(); }

std::string print_rule(const Rule& rule) {
  std::string out = "rule " + rule.id + ": ";
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i) out += ", ";
    out += to_string(rule.body[i]);
  }
  out += " => ";
  std::set<std::string> declared;
  for (std::size_t i = 0; i < rule.head.size(); ++i) {
    if (i) out += ", ";
    const Atom& a = rule.head[i];
    out += a.predicate + "(";
    for (std::size_t k = 0; k < a.args.size(); ++k) {
      if (k) out += ", ";
      const auto* v = std::get_if<Variable>(&a.args[k]);
      if (v && rule.fresh_vars.count(v->name) && declared.insert(v->name).second) {
        out += "fresh(?" + v->name + ")";
      } else {
        out += to_string(a.args[k]);
      }
    }
    out += ")";
  }
  out += ".";
  return out;
}

std::string print_rules(const RuleSet& rules) {
  std::string out;
  for (const auto& r : rules.rules) out += print_rule(r) + "\n";
  return out;
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RuleSet load_rules(const std::string& path) { return parse_rules(slurp(path)); }

std::vector<Fact> load_facts(const std::string& path) { return parse_facts(slurp(path)); }

}  // namespace pdv::infer
