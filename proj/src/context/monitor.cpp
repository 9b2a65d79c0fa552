#include "pdv/context/monitor.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "pdv/core/error.hpp"
#include "pdv/infer/rules.hpp"

namespace pdv::context {
namespace {

Fact device_fact(const std::string& owner, const std::string& device) {
  return Fact{"useDevice", {Constant{owner}, Constant{device}}};
}

}  // namespace

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::device_on: return "device_on";
    case EventKind::device_off: return "device_off";
    case EventKind::fact_asserted: return "fact_asserted";
    case EventKind::fact_retracted: return "fact_retracted";
    case EventKind::flag_set: return "flag_set";
  }
  return "fact_asserted";
}

EventKind parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::device_on, EventKind::device_off, EventKind::fact_asserted, EventKind::fact_retracted,
                 EventKind::flag_set}) {
    if (to_string(k) == s) return k;
  }
  throw Error(Errc::decode_error, "unknown event kind: " + std::string(s));
}

std::string_view to_string(Action a) { return a == Action::keep ? "keep" : "suspend"; }

void to_json(Json& j, const ContextEvent& e) {
  Json payload;
  switch (e.kind) {
    case EventKind::device_on:
    case EventKind::device_off: payload = {{"device", e.device}}; break;
    case EventKind::fact_asserted:
    case EventKind::fact_retracted: payload = {{"fact", e.fact ? to_string(*e.fact) : ""}}; break;
    case EventKind::flag_set: payload = {{"parameter", e.parameter}, {"value", e.value}}; break;
  }
  j = Json{{"t", encode_timestamp(e.timestamp)}, {"kind", to_string(e.kind)}, {"payload", payload}};
}

void from_json(const Json& j, ContextEvent& e) {
  e = ContextEvent{};
  e.timestamp = decode_timestamp(j.at("t"));
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  const Json& p = j.at("payload");
  switch (e.kind) {
    case EventKind::device_on:
    case EventKind::device_off: e.device = p.at("device").get<std::string>(); break;
    case EventKind::fact_asserted:
    case EventKind::fact_retracted: e.fact = infer::parse_fact(p.at("fact").get<std::string>()); break;
    case EventKind::flag_set:
      e.parameter = p.at("parameter").get<std::string>();
      e.value = p.at("value").get<int>();
      if (e.value != 0 && e.value != 1) throw_decode_error("flag value must be 0 or 1");
      break;
  }
}

std::vector<ContextEvent> load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  std::vector<ContextEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decode<ContextEvent>(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw Error(Errc::decode_error, path + ": " + e.what());
    }
  }
  return out;
}

Applied apply_event(const ContextState& state, const ContextEvent& event, const Monitor& monitor) {
  Applied out{state, std::nullopt};
  ContextState& s = out.state;
  switch (event.kind) {
    case EventKind::device_on: {
      const Fact f = device_fact(monitor.owner, event.device);
      if (s.device_raised.count(event.device) || s.active_facts.count(f)) {
        out.warning = event.device + " is already on";
        break;
      }
      const auto before = infer::inferable_parameters({}, s, monitor.rules, monitor.binding);
      s.active_facts.insert(f);
      auto after = infer::inferable_parameters({}, s, monitor.rules, monitor.binding);
      if (auto b = monitor.binding.find(f.predicate); b != monitor.binding.end()) after.insert(b->second);
      std::vector<std::string> raised;
      for (const auto& p : after) {
        if (before.count(p)) continue;
        auto flag = s.flags.find(p);
        if (flag != s.flags.end() && flag->second == 0) {
          flag->second = 1;
          raised.push_back(p);
        }
      }
      s.device_raised[event.device] = std::move(raised);
      break;
    }
    case EventKind::device_off: {
      auto it = s.device_raised.find(event.device);
      if (it == s.device_raised.end()) {
        out.warning = event.device + " is not on";
        break;
      }
      for (const auto& p : it->second) s.flags[p] = 0;
      s.device_raised.erase(it);
      s.active_facts.erase(device_fact(monitor.owner, event.device));
      break;
    }
    case EventKind::fact_asserted:
      if (!event.fact || !is_ground(*event.fact)) throw Error(Errc::invalid_argument, "fact event needs a ground fact");
      if (!s.active_facts.insert(*event.fact).second) out.warning = to_string(*event.fact) + " already holds";
      break;
    case EventKind::fact_retracted:
      if (!event.fact) throw Error(Errc::invalid_argument, "fact event needs a fact");
      if (!s.active_facts.erase(*event.fact)) out.warning = to_string(*event.fact) + " is not active";
      break;
    case EventKind::flag_set: {
      if (event.value != 0 && event.value != 1) throw Error(Errc::invalid_argument, "flag value must be 0 or 1");
      auto it = s.flags.find(event.parameter);
      if (it == s.flags.end()) throw Error(Errc::unknown_parameter, event.parameter);
      it->second = event.value;
      break;
    }
  }
  return out;
}

query::Query granted_query(const query::Grant& grant) {
  query::Query q = grant.query;
  q.items = grant.allowed_items;
  q.sample_period = grant.sample_period;
  q.noise_epsilon = grant.noise_epsilon;
  return q;
}

std::vector<GrantAction> reevaluate(const std::vector<GrantUnderReview>& grants, const ContextState& state,
                                    const OwnerPolicy& policy, const tradeoff::Environment& env, Timestamp now) {
  std::vector<GrantAction> out;
  // Inference depends only on the items and the context.
  std::map<std::vector<std::string>, RiskAssessment> inferred;
  for (const auto& g : grants) {
    if (g.grant.status != query::GrantStatus::active) continue;
    GrantAction a;
    a.grant_id = g.grant.id;
    const auto q = granted_query(g.grant);
    auto base = inferred.find(q.items);
    if (base == inferred.end()) {
      base = inferred.emplace(q.items, tradeoff::assess_risk(q, g.consumer, policy, state, env)).first;
    }
    a.reason = tradeoff::decide(tradeoff::reassess(base->second, q, g.consumer, policy, state, env), q, g.consumer,
                                g.offer, policy, env, now);
    if (a.reason.outcome == Outcome::deny) {
      a.action = Action::suspend;
      a.notify_owner = true;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace pdv::context
