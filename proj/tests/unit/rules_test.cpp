#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>

#include "pdv/core/error.hpp"
#include "pdv/infer/rules.hpp"
#include "../common/generators.hpp"
#include "test_util.hpp"

using namespace pdv;
using namespace pdv::infer;
using pdv::testing::source_path;
using pdv::testing::gen::RuleGen;

namespace {

template <class Fn>
void expect_located(Fn&& fn, Errc code, int line, int col) {
  try {
    fn();
    FAIL("expected ", to_string(code));
  } catch (const LocatedError& e) {
    CHECK(e.code() == code);
    CHECK(e.line() == line);
    CHECK(e.column() == col);
  }
}

}  // namespace

TEST_CASE("figure 4 rules parse") {
  const auto rules = load_rules(source_path("rules/figure4.rules"));
  REQUIRE(rules.rules.size() == 4);
  const Rule* rule1 = rules.find("rule1");
  REQUIRE(rule1);
  CHECK(rule1->body.size() == 4);
  CHECK(rule1->head.size() == 3);
  CHECK(rule1->fresh_vars == std::set<std::string>{"d"});
  const Rule* rule2 = rules.find("rule2");
  REQUIRE(rule2);
  CHECK(rule2->body[1].predicate == "useDevice");
  CHECK(rules.find("rule3")->body.size() == 6);
  CHECK(rules.head_predicates().count("hasDisease"));
  CHECK(parse_rules(print_rules(rules)) == rules);
}

TEST_CASE("every shipped rule and fact file parses") {
  for (const char* dir : {"rules", "fixtures"}) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(source_path(dir))) {
      const auto ext = entry.path().extension();
      CAPTURE(entry.path().string());
      if (ext == ".rules") CHECK_NOTHROW(load_rules(entry.path().string()));
      if (ext == ".facts") CHECK_NOTHROW(load_facts(entry.path().string()));
    }
  }
}

TEST_CASE("rule printing round-trips over generated rule sets") {
  RuleGen gen(1234);
  for (int i = 0; i < 1000; ++i) {
    const RuleSet rules = gen.rules();
    const std::string text = print_rules(rules);
    CAPTURE(text);
    CHECK(parse_rules(text) == rules);
    CHECK(print_rules(parse_rules(text)) == text);
  }
}

TEST_CASE("facts") {
  const auto facts = parse_facts("Person(alice). isShared(\"energy.consumption\", \"true\").\nreading(r1, -1.5e3).");
  REQUIRE(facts.size() == 3);
  CHECK(facts[1].args[0] == Term{StringLit{"energy.consumption"}});
  CHECK(facts[2].args[1] == Term{NumberLit{-1500}});
  const Fact sk = parse_fact("useDevice(alice, _:rule1/00000000000000ff/0)");
  CHECK(sk.args[1] == Term{Skolem{"rule1", 255, 0}});
  CHECK(parse_fact(to_string(sk)) == sk);
  CHECK_THROWS_AS(parse_facts("Person(?p)."), SyntaxError);
  CHECK_THROWS_AS(parse_facts("Person(alice)"), SyntaxError);
  CHECK_THROWS_AS(parse_fact("useDevice(alice, _:rule1/ff/0)"), SyntaxError);
}

TEST_CASE("syntax errors carry line, column and the expected token") {
  auto syntax = [](std::string_view text, int line, int col, std::string expected) {
    CAPTURE(text);
    try {
      parse_rules(text);
      FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
      CHECK(e.code() == Errc::syntax_error);
      CHECK(e.line() == line);
      CHECK(e.column() == col);
      CHECK(e.expected() == expected);
    }
  };
  syntax("rule r: A(?x) => B(?x)", 1, 23, "'.' or ','");
  syntax("rule r: A(?x) B(?x).", 1, 15, "'=>' or ','");
  syntax("# comment\nrul r: A(?x) => B(?x).", 2, 1, "'rule'");
  syntax("rule r A(?x) => B(?x).", 1, 8, "':'");
  syntax("rule r: A(?x => B(?x).", 1, 14, "',' or ')'");
  syntax("rule r: A(?x) => B(\"open).", 1, 20, "closing '\"'");
  syntax("rule r: A(?x) => B(?x) ; ", 1, 24, "token");
  syntax("rule r: A(fresh(?x)) => B(?x).", 1, 11, "body term (fresh is head-only)");
  syntax("rule r: A(?x) => B(fresh(?x)).", 1, 26, "variable not bound in the body");
  syntax("rule r: A(?x) => B(?).", 1, 21, "variable name");
  syntax("rule r: A(?x) =>\n  B(?x),\n  C().", 3, 5, "term");
}

TEST_CASE("semantic rule errors") {
  expect_located([] { parse_rules("rule r: A(?x) =>\n  B(?x, ?y)."); }, Errc::unbound_head_variable, 2, 9);
  expect_located([] { parse_rules("rule r: A(?x) => B(?x).\nrule s: A(?x, ?y) => B(?x)."); }, Errc::arity_mismatch,
                 2, 9);
  expect_located([] { parse_rules("rule r: A(?x) => B(?x).\n\n  rule r: A(?x) => C(?x)."); }, Errc::duplicate_rule, 3,
                 8);
}
