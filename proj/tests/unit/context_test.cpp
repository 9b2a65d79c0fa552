#include <doctest.h>

#include <random>

#include "../common/alice.hpp"
#include "pdv/context/monitor.hpp"
#include "pdv/core/error.hpp"
#include "test_util.hpp"

using namespace pdv;
using namespace pdv::context;
namespace alice = pdv::testing::alice;
using pdv::testing::at;

namespace {

Monitor alice_monitor() {
  const auto env = alice::environment();
  return Monitor{"alice", env.rules, env.binding};
}

ContextEvent device(EventKind kind, const std::string& name) {
  ContextEvent e;
  e.timestamp = at("2024-01-01T14:10:00Z");
  e.kind = kind;
  e.device = name;
  return e;
}

ContextEvent fact_event(EventKind kind, const char* text) {
  ContextEvent e;
  e.kind = kind;
  e.fact = infer::parse_fact(text);
  return e;
}

ContextEvent flag(const std::string& parameter, int value) {
  ContextEvent e;
  e.kind = EventKind::flag_set;
  e.parameter = parameter;
  e.value = value;
  return e;
}

// Marketer grant for energy at `period`, offered `benefit` financial.
GrantUnderReview energy_grant(const std::string& id, Duration period, double benefit) {
  GrantUnderReview g;
  g.grant.id = id;
  g.grant.consumer_id = "marketer";
  g.grant.query = alice::energy_query("15s");
  g.grant.allowed_items = {"energy.consumption"};
  g.grant.sample_period = period;
  g.consumer = alice::marketer();
  g.offer = BenefitOffer{BenefitCategory::financial, benefit, ""};
  return g;
}

}  // namespace

TEST_CASE("apply_event") {
  const auto monitor = alice_monitor();
  const auto start = alice::context();

  const auto on = apply_event(start, device(EventKind::device_on, "haemodialysis1"), monitor);
  CHECK_FALSE(on.warning);
  CHECK(on.state.active_facts.count(infer::parse_fact("useDevice(alice, haemodialysis1)")));
  const auto off = apply_event(on.state, device(EventKind::device_off, "haemodialysis1"), monitor);
  CHECK(off.state == start);

  auto lowered = start;
  lowered.flags["personal_information"] = 0;
  lowered.flags["device_use"] = 0;
  const auto raised = apply_event(lowered, device(EventKind::device_on, "haemodialysis1"), monitor);
  CHECK(raised.state.flags.at("personal_information") == 1);
  CHECK(raised.state.flags.at("device_use") == 1);
  CHECK(apply_event(raised.state, device(EventKind::device_off, "haemodialysis1"), monitor).state == lowered);

  const auto pa = apply_event(start, flag("presence_absence", 0), monitor);
  CHECK(pa.state.flags.at("presence_absence") == 0);
  CHECK(pa.state.active_facts == start.active_facts);

  const auto married = apply_event(start, fact_event(EventKind::fact_asserted, "isMarried(alice, \"true\")"), monitor);
  CHECK(married.state.active_facts.size() == start.active_facts.size() + 1);
  const auto retracted =
      apply_event(married.state, fact_event(EventKind::fact_retracted, "isMarried(alice, \"true\")"), monitor);
  CHECK(retracted.state == start);

  const auto absent = apply_event(start, fact_event(EventKind::fact_retracted, "isMarried(alice, \"true\")"), monitor);
  CHECK(absent.warning);
  CHECK(absent.state == start);
  CHECK(apply_event(start, device(EventKind::device_off, "stove1"), monitor).warning);
  CHECK_THROWS_AS(apply_event(start, flag("religion", 1), monitor), Error);
}

TEST_CASE("device_off inverts device_on for any starting flags") {
  const auto monitor = alice_monitor();
  std::mt19937 rng(4);
  for (int i = 0; i < 100; ++i) {
    auto state = alice::context();
    for (auto& [_, f] : state.flags) f = static_cast<int>(rng() % 2);
    const std::string dev = i % 2 ? "haemodialysis1" : "stove1";
    const auto on = apply_event(state, device(EventKind::device_on, dev), monitor);
    CHECK(apply_event(on.state, device(EventKind::device_off, dev), monitor).state == state);
  }
}

TEST_CASE("event json") {
  const auto e = device(EventKind::device_on, "haemodialysis1");
  CHECK(decode<ContextEvent>(Json::parse(Json(e).dump())) == e);
  auto f = fact_event(EventKind::fact_asserted, "hasLocation(alice, l1)");
  f.timestamp = at("2024-01-01T00:00:00Z");
  CHECK(decode<ContextEvent>(Json(f)) == f);
  auto fl = flag("habits", 1);
  CHECK(decode<ContextEvent>(Json(fl)) == fl);
  const auto events = load_events(alice::path("fixtures/alice/events.jsonl"));
  CHECK_FALSE(events.empty());
}

TEST_CASE("reevaluate") {
  const auto env = alice::environment();
  const auto policy = alice::policy();
  const auto monitor = alice_monitor();
  const auto start = alice::context();
  CHECK(reevaluate({}, start, policy, env).empty());

  // A 30m grant with a small offer holds until the dialysis machine runs.
  const auto g30 = energy_grant("g30", Duration{1800}, 0.03);
  const auto kept = reevaluate({g30}, start, policy, env);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].action == Action::keep);
  CHECK_FALSE(kept[0].notify_owner);

  const auto on = apply_event(start, device(EventKind::device_on, "haemodialysis1"), monitor).state;
  const auto actions = reevaluate({g30}, on, policy, env);
  REQUIRE(actions.size() == 1);
  CHECK(actions[0].action == Action::suspend);
  CHECK(actions[0].notify_owner);
  // Oracle: personal_information joins habits and device_use, all at leakage 0.02.
  const double r = 0.8 * (0.7 + 0.9 + 1.0) * 0.02;
  CHECK(actions[0].reason.risk_magnitude == doctest::Approx(r));
  CHECK(actions[0].reason.utility == doctest::Approx(0.5 * 0.03 - 0.5 * r));

  // A fine-grained 15s grant from a generous consumer also flips.
  const auto g15 = energy_grant("g15", Duration{15}, 1.0);
  CHECK(reevaluate({g15}, start, policy, env)[0].action == Action::keep);
  CHECK(reevaluate({g15}, on, policy, env)[0].action == Action::suspend);

  // Flag already set: nothing changes.
  const auto same = apply_event(start, flag("habits", 1), monitor).state;
  for (const auto& a : reevaluate({g30, g15}, same, policy, env)) CHECK(a.action == Action::keep);

  // Suspended grants are never re-activated.
  auto suspended = g30;
  suspended.grant.status = query::GrantStatus::suspended;
  CHECK(reevaluate({suspended}, start, policy, env).empty());
}

TEST_CASE("event sequences are deterministic and quiescent") {
  const auto env = alice::environment();
  const auto policy = alice::policy();
  const auto monitor = alice_monitor();
  const std::vector<GrantUnderReview> grants{energy_grant("a", Duration{1800}, 0.03),
                                             energy_grant("b", Duration{300}, 0.5),
                                             energy_grant("c", Duration{15}, 2.0)};
  std::mt19937 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ContextEvent> events;
    for (int i = 0; i < 10; ++i) {
      switch (rng() % 4) {
        case 0: events.push_back(device(EventKind::device_on, "haemodialysis1")); break;
        case 1: events.push_back(device(EventKind::device_off, "haemodialysis1")); break;
        case 2: events.push_back(flag("habits", static_cast<int>(rng() % 2))); break;
        default: events.push_back(fact_event(EventKind::fact_asserted, "isMarried(alice, \"true\")"));
      }
    }
    auto run = [&] {
      std::vector<std::vector<Action>> log;
      auto state = alice::context();
      for (const auto& e : events) {
        state = apply_event(state, e, monitor).state;
        std::vector<Action> acts;
        for (const auto& a : reevaluate(grants, state, policy, env)) acts.push_back(a.action);
        log.push_back(acts);
        std::vector<Action> again;
        for (const auto& a : reevaluate(grants, state, policy, env)) again.push_back(a.action);
        CHECK(again == acts);
      }
      return std::make_pair(state, log);
    };
    CHECK(run() == run());
  }
}
