#pragma once

// Information-flow checks over the gateway API, shared by the unit and
// acceptance suites.

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gateway.hpp"

namespace pdv::testing::gateway {

/// Keys that would reveal owner-side reasoning or context to a consumer.
inline const std::set<std::string>& owner_only_keys() {
  static const std::set<std::string> keys = {
      "recommendation", "assessment",   "risk_magnitude",  "utility",     "explanation", "derivations",
      "parameters",     "benefit",      "flags",           "active_facts", "weight",     "parameter_weights",
      "context_flag",   "leakage",      "tradeoff_bias_w", "sensitivity", "trust",       "grant_id",
      "decision_id",    "device_raised"};
  return keys;
}

inline void collect_keys(const Json& j, std::set<std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      out.insert(k);
      collect_keys(v, out);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_keys(v, out);
  }
}

inline std::string fill_pattern(const std::string& pattern, const std::string& id) {
  const auto open = pattern.find('{');
  if (open == std::string::npos) return pattern;
  const auto close = pattern.find('}', open);
  return fill_pattern(pattern.substr(0, open) + id + pattern.substr(close + 1), id);
}

struct LeakAudit {
  int consumer_routes = 0;
  int bodies = 0;
  /// "<route>: <key>" for every owner-only key seen by a consumer.
  std::vector<std::string> leaks;
  /// Routes that answered a caller of the wrong role with anything but 401/403.
  std::vector<std::string> gating_failures;
};

/// Calls every consumer route, as the owning and as a foreign consumer, with
/// requests in every reachable state, and every other route with a consumer
/// token.
inline LeakAudit consumer_leak_audit() {
  LeakAudit out;
  Harness h(false);
  auto respond = [&](const std::string& id, const char* action, double value = 0) {
    return h.call("POST", "/api/requests/" + id + "/respond", kMarketer,
                  {{"action", action}, {"offer", {{"category", "financial"}, {"declared_value", value}}}});
  };
  auto decide = [&](const std::string& id, const char* action) {
    h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", action}});
  };
  std::vector<std::string> ids;
  auto fresh = [&](const char* sample, double value) {
    ids.push_back(h.submit(kMarketer, marketer_query(sample), value).body["id"]);
    return ids.back();
  };
  fresh("15s", 0.03);                                   // assessed
  decide(fresh("15s", 0.03), "counter");                // countered
  const auto accepted = fresh("30m", 0.03);
  decide(accepted, "accept");                           // accepted, grant active
  decide(fresh("15s", 0.03), "deny");                   // denied
  const auto withdrawn = fresh("15s", 0.03);
  decide(withdrawn, "counter");
  respond(withdrawn, "withdraw");                       // withdrawn
  const auto suspended = fresh("30m", 0.03);
  decide(suspended, "accept");
  h.call("POST", "/api/ingest/events", kMeter,
         {{"t", "2024-01-01T14:10:00Z"}, {"kind", "device_on"}, {"payload", {{"device", "haemodialysis1"}}}});
  ids.push_back("r404");

  for (const auto& route : h.api->routes()) {
    if (route.role != Role::consumer) {
      for (const char* token : {kMarketer, kGrid}) {
        const auto r = h.call(route.method, fill_pattern(route.pattern, ids.front()), token);
        if (r.status != 403) out.gating_failures.push_back(route.method + " " + route.pattern);
      }
      continue;
    }
    ++out.consumer_routes;
    std::vector<Response> responses;
    for (const auto& id : ids) {
      for (const char* token : {kMarketer, kGrid}) {
        const auto path = fill_pattern(route.pattern, id);
        responses.push_back(h.call(route.method, path, token,
                                   {{"query", marketer_query()},
                                    {"offer", {{"category", "financial"}, {"declared_value", 0.5}}},
                                    {"action", "raise_offer"}}));
        responses.push_back(h.call(route.method, path, token, Json("not an object")));
      }
    }
    for (const auto& r : responses) {
      ++out.bodies;
      std::set<std::string> keys;
      collect_keys(r.body, keys);
      for (const auto& k : keys) {
        if (owner_only_keys().count(k)) out.leaks.push_back(route.method + " " + route.pattern + ": " + k);
      }
    }
  }
  return out;
}

struct TrafficStats {
  int transitions = 0;
  int fetched = 0;
  /// Diagram violations and releases without an active grant.
  std::vector<std::string> violations;
  /// Releases whose decision is missing from the audit log.
  int unaudited = 0;
};

/// Random consumer, owner and device traffic until `min_transitions`
/// request state changes were observed.
inline TrafficStats random_traffic(bool auto_accept, std::uint64_t seed, int min_transitions = 1000) {
  TrafficStats out;
  Harness h(auto_accept);
  std::mt19937_64 rng(seed);
  const char* periods[] = {"15s", "1m", "5m", "30m", "1h"};
  const char* consumers[] = {kMarketer, kGrid};
  std::map<std::string, RequestState> last;
  std::vector<std::string> live;
  auto violation = [&](const std::string& what) { out.violations.push_back(what); };

  auto observe = [&](const std::string& id) {
    const auto r = h.vault->request(id);
    auto it = last.find(id);
    if (it == last.end()) {
      // New requests are assessed on arrival and may be resolved at once.
      if (r.state == RequestState::pending || (!auto_accept && r.state != RequestState::assessed)) {
        violation(id + " arrived " + std::string(to_string(r.state)));
      }
      last[id] = r.state;
      ++out.transitions;
    } else if (it->second != r.state) {
      const bool direct = is_allowed_transition(it->second, r.state);
      const bool via_assessed = auto_accept && is_allowed_transition(it->second, RequestState::assessed) &&
                                is_allowed_transition(RequestState::assessed, r.state);
      if (!(direct || via_assessed)) {
        violation(id + ": " + std::string(to_string(it->second)) + " -> " + std::string(to_string(r.state)));
      }
      it->second = r.state;
      ++out.transitions;
    }
    if (r.state == RequestState::accepted && !r.grant_id) violation(id + " accepted without a grant");
    if (is_terminal(r.state)) live.erase(std::remove(live.begin(), live.end(), id), live.end());
  };

  for (int step = 0; out.transitions < min_transitions && step < 20 * min_transitions; ++step) {
    if (live.size() < 4 || rng() % 6 == 0) {
      const double value = static_cast<double>(rng() % 300) / 100.0;
      const auto r = h.submit(consumers[rng() % 2], marketer_query(periods[rng() % 5]), value);
      if (r.status != 201) {
        violation("submit failed: " + r.body.dump());
        break;
      }
      live.push_back(r.body["id"]);
      observe(r.body["id"]);
      continue;
    }
    // Mostly live requests, sometimes a settled or unknown one.
    std::string id = live[rng() % live.size()];
    if (rng() % 8 == 0) id = "r" + std::to_string(1 + rng() % (last.size() + 2));
    const char* consumer = consumers[rng() % 2];
    switch (rng() % 7) {
      case 0: {
        const char* actions[] = {"accept", "deny", "counter"};
        h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", actions[rng() % 3]}});
        break;
      }
      case 1:
      case 2: {
        const char* actions[] = {"accept_counter", "raise_offer", "raise_offer", "withdraw"};
        const Json offer = {{"category", "financial"}, {"declared_value", static_cast<double>(rng() % 400) / 100.0}};
        h.call("POST", "/api/requests/" + id + "/respond", consumer, {{"action", actions[rng() % 4]}, {"offer", offer}});
        break;
      }
      case 3: {
        const auto r = h.call("GET", "/api/requests/" + id + "/result", consumer);
        if (r.status != 200) break;
        ++out.fetched;
        const auto req = h.vault->request(id);
        bool active = false;
        for (const auto& g : h.vault->grants()) {
          active |= g.grant.id == req.grant_id && g.grant.status == query::GrantStatus::active;
        }
        if (!active || req.state != RequestState::accepted ||
            req.consumer_id != (consumer == kMarketer ? "marketer" : "grid")) {
          violation(id + " released without an active grant of the caller");
        }
        break;
      }
      case 4: {
        const char* kinds[] = {"device_on", "device_off"};
        h.call("POST", "/api/ingest/events", kMeter,
               {{"t", "2024-01-01T12:00:00Z"}, {"kind", kinds[rng() % 2]}, {"payload", {{"device", "haemodialysis1"}}}});
        break;
      }
      case 5: {
        const auto grants = h.vault->grants();
        if (grants.empty()) break;
        const auto& g = grants[rng() % grants.size()];
        const bool was_revoked = g.grant.status == query::GrantStatus::revoked;
        h.call("POST", "/api/owner/grants/" + g.grant.id + (rng() % 3 ? "/reinstate" : "/revoke"), kOwner);
        for (const auto& after : h.vault->grants()) {
          if (was_revoked && after.grant.id == g.grant.id && after.grant.status != query::GrantStatus::revoked) {
            violation(g.grant.id + " left the revoked state");
          }
        }
        break;
      }
      default: h.call("GET", "/api/requests/" + id, consumer); break;
    }
    if (last.count(id)) observe(id);
  }
  std::set<std::string> decisions;
  for (const auto& d : h.vault->decisions()) decisions.insert(d.id);
  const auto fetches = h.vault->fetches();
  if (fetches.size() != static_cast<std::size_t>(out.fetched)) violation("fetch log size differs from releases");
  for (const auto& f : fetches) out.unaudited += decisions.count(f.decision_id) ? 0 : 1;
  return out;
}

}  // namespace pdv::testing::gateway
