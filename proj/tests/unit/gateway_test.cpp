#include <doctest.h>

#include <httplib.h>

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include "../common/traffic.hpp"
#include "pdv/core/error.hpp"
#include "pdv/gateway/server.hpp"
#include "test_util.hpp"

using namespace pdv;
using namespace pdv::testing::gateway;


TEST_CASE("routes are role-gated") {
  Harness h(false, false);
  const std::map<Role, std::string> tokens{{Role::consumer, kMarketer}, {Role::device, kMeter}, {Role::owner, kOwner}};
  std::set<std::string> paths;
  for (const auto& route : h.api->routes()) {
    CAPTURE(route.pattern);
    paths.insert(route.method + " " + route.pattern);
    const auto path = fill_pattern(route.pattern, "x1");
    CHECK(h.call(route.method, path, "").status == 401);
    CHECK(h.call(route.method, path, "not-a-token").status == 401);
    for (const auto& [role, token] : tokens) {
      if (role != route.role) CHECK(h.call(route.method, path, token).status == 403);
    }
    if (route.pattern.rfind("/api/owner/", 0) == 0) CHECK(route.role == Role::owner);
  }
  for (const char* required :
       {"POST /api/requests", "GET /api/requests/{id}", "POST /api/requests/{id}/respond", "GET /api/requests/{id}/result",
        "POST /api/ingest/readings", "POST /api/ingest/events", "GET /api/owner/requests",
        "POST /api/owner/requests/{id}/decision", "GET /api/owner/requests/{id}/preview", "GET /api/owner/grants",
        "POST /api/owner/grants/{id}/revoke", "GET /api/owner/notifications", "PUT /api/owner/policy",
        "GET /api/owner/audit", "POST /api/consumers/{id}/ratings"}) {
    CHECK(paths.count(required));
  }
  CHECK(h.call("GET", "/api/nothing", kOwner).status == 404);
  CHECK(h.call("DELETE", "/api/requests", kMarketer).status == 405);
}

TEST_CASE("consumers only ever see state, counter terms and result sets") {
  Harness h(true);
  const auto submitted = h.submit(kMarketer, marketer_query(), 0.03);
  REQUIRE(submitted.status == 201);
  const std::string id = submitted.body["id"];
  CHECK(submitted.body["state"] == "countered");
  CHECK(submitted.body["counter"]["sample_period"] == "30m");

  std::vector<Json> seen{submitted.body};
  seen.push_back(h.call("GET", "/api/requests/" + id, kMarketer).body);
  seen.push_back(h.call("GET", "/api/requests/" + id + "/result", kMarketer).body);
  seen.push_back(h.call("POST", "/api/requests/" + id + "/respond", kMarketer, {{"action", "accept_counter"}}).body);
  const auto result = h.call("GET", "/api/requests/" + id + "/result", kMarketer);
  CHECK(result.status == 200);
  seen.push_back(result.body);
  // Bad inputs return error codes, not reasoning.
  seen.push_back(h.submit(kMarketer, "GET energy.consumption RANGE", 1).body);
  seen.push_back(h.call("POST", "/api/requests/" + id + "/respond", kMarketer, {{"action", "withdraw"}}).body);

  for (const auto& body : seen) {
    std::set<std::string> keys;
    collect_keys(body, keys);
    for (const auto& k : keys) {
      CAPTURE(body.dump());
      CHECK_FALSE(owner_only_keys().count(k));
    }
  }
  // Another consumer cannot observe the request at all.
  CHECK(h.call("GET", "/api/requests/" + id, kGrid).status == 403);
  CHECK(h.call("GET", "/api/requests/" + id + "/result", kGrid).status == 403);
  CHECK(h.call("POST", "/api/requests/" + id + "/respond", kGrid, {{"action", "withdraw"}}).status == 403);
}

TEST_CASE("released readings match the granted accuracy") {
  Harness h(true);
  const std::string id = h.submit(kMarketer, marketer_query(), 0.03).body["id"];
  h.call("POST", "/api/requests/" + id + "/respond", kMarketer, {{"action", "accept_counter"}});
  const auto body = h.call("GET", "/api/requests/" + id + "/result", kMarketer).body;
  REQUIRE(body["results"].size() == 1);
  const auto& rs = body["results"][0];
  CHECK(rs["accuracy"]["sample_period"] == "30m");
  CHECK(rs["readings"].size() == 48);
  for (std::size_t i = 1; i < rs["readings"].size(); ++i) {
    CHECK(decode_timestamp(rs["readings"][i]["t"]) - decode_timestamp(rs["readings"][i - 1]["t"]) ==
          std::chrono::minutes{30});
  }
  // Every release is logged against the grant and the decision behind it.
  const auto audit = h.call("GET", "/api/owner/audit", kOwner).body;
  REQUIRE(audit["fetches"].size() == 1);
  const auto& f = audit["fetches"][0];
  bool decision_found = false;
  for (const auto& d : audit["decisions"]) decision_found |= d["id"] == f["decision_id"];
  CHECK(decision_found);
  CHECK(f["grant_id"] == h.vault->request(id).grant_id.value());
}

TEST_CASE("raising the offer flips a denial into an answer") {
  Harness h(false);
  const std::string id = h.submit(kMarketer, marketer_query(), 0.5).body["id"];
  auto r = h.vault->request(id);
  CHECK(r.state == RequestState::assessed);
  CHECK(r.recommendation->outcome == Outcome::deny);
  CHECK(r.recommendation->utility == doctest::Approx(0.25 - 0.4244));

  const auto countered = h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", "counter"}});
  REQUIRE(countered.status == 200);
  CHECK(countered.body["state"] == "countered");

  const Json offer = {{"category", "financial"}, {"declared_value", 3.0}};
  const auto raised =
      h.call("POST", "/api/requests/" + id + "/respond", kMarketer, {{"action", "raise_offer"}, {"offer", offer}});
  CHECK(raised.body["state"] == "assessed");
  r = h.vault->request(id);
  CHECK(r.recommendation->outcome == Outcome::answer);
  CHECK(r.recommendation->utility == doctest::Approx(1.5 - 0.4244));
  CHECK(h.vault->notifications().back().kind == NotificationKind::counter_received);

  CHECK(h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", "accept"}}).status == 200);
  CHECK(h.vault->grants().front().grant.sample_period == Duration{15});
}

TEST_CASE("preview matches the decision at that period") {
  Harness h(false);
  const std::string id = h.submit(kMarketer, marketer_query(), 0.03).body["id"];
  const auto p30 = h.call("GET", "/api/owner/requests/" + id + "/preview", kOwner, {}, {{"period", "30m"}});
  REQUIRE(p30.status == 200);
  CHECK(p30.body["outcome"] == "Answer");
  CHECK(p30.body["utility"].get<double>() == doctest::Approx(0.5 * 0.03 - 0.5 * 0.8 * 1.6 * 0.02));
  const auto p5 = h.call("GET", "/api/owner/requests/" + id + "/preview", kOwner, {}, {{"period", "5m"}});
  CHECK(p5.body["outcome"] == "Deny");
  const auto r15 = h.vault->request(id).recommendation.value();
  const auto p15 = h.call("GET", "/api/owner/requests/" + id + "/preview", kOwner, {}, {{"period", "15s"}});
  CHECK(p15.body["utility"].get<double>() == r15.utility);
  CHECK(h.call("GET", "/api/owner/requests/" + id + "/preview", kOwner).status == 400);
  CHECK(h.call("GET", "/api/owner/requests/" + id + "/preview", kOwner, {}, {{"period", "3d"}}).status == 400);
  // Previews leave no trace.
  CHECK(h.vault->decisions().size() == 1);
}

TEST_CASE("owner decisions and grants") {
  Harness h(false);
  const std::string id = h.submit(kMarketer, marketer_query("30m"), 0.03).body["id"];
  CHECK(h.vault->request(id).recommendation->outcome == Outcome::answer);
  // Countering an answered query is a precondition error.
  CHECK(h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", "counter"}}).status == 409);
  CHECK(h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", "approve"}}).status == 400);
  CHECK(h.call("GET", "/api/requests/" + id + "/result", kMarketer).status == 409);
  CHECK(h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", "accept"}}).status == 200);
  CHECK(h.call("POST", "/api/owner/requests/" + id + "/decision", kOwner, {{"action", "deny"}}).status == 409);
  const std::string gid = h.vault->request(id).grant_id.value();
  CHECK(h.call("GET", "/api/requests/" + id + "/result", kMarketer).status == 200);
  CHECK(h.call("POST", "/api/owner/grants/" + gid + "/reinstate", kOwner).status == 409);
  CHECK(h.call("POST", "/api/owner/grants/" + gid + "/revoke", kOwner).status == 200);
  const auto revoked = h.call("GET", "/api/requests/" + id + "/result", kMarketer);
  CHECK(revoked.status == 409);
  CHECK(revoked.body["error"] == "grant-inactive");
  CHECK(h.call("POST", "/api/owner/grants/" + gid + "/revoke", kOwner).status == 409);
  CHECK(h.call("POST", "/api/owner/grants/nope/revoke", kOwner).status == 404);

  const std::string denied = h.submit(kGrid, marketer_query(), 0.0).body["id"];
  h.call("POST", "/api/owner/requests/" + denied + "/decision", kOwner, {{"action", "deny"}});
  const auto d = h.call("GET", "/api/requests/" + denied + "/result", kGrid);
  CHECK(d.status == 409);
  CHECK(d.body["error"] == "request-denied");
}

TEST_CASE("policy, ratings and validation errors") {
  Harness h(false, false);
  auto policy = h.call("GET", "/api/owner/policy", kOwner).body;
  policy["tradeoff_bias_w"] = 1.5;
  policy["parameter_weights"]["habits"] = -1;
  const auto bad = h.call("PUT", "/api/owner/policy", kOwner, policy);
  CHECK(bad.status == 400);
  CHECK(bad.body["violations"].size() == 2);
  policy["tradeoff_bias_w"] = 0.4;
  policy["parameter_weights"]["habits"] = 0.1;
  CHECK(h.call("PUT", "/api/owner/policy", kOwner, policy).status == 200);
  CHECK(h.vault->policy().tradeoff_bias_w == 0.4);

  CHECK(h.call("POST", "/api/consumers/marketer/ratings", kOwner, {{"rating", 1.2}}).body["error"] ==
        "out-of-range-rating");
  CHECK(h.call("POST", "/api/consumers/nobody/ratings", kOwner, {{"rating", 0.5}}).status == 404);
  CHECK(h.call("POST", "/api/consumers/marketer/ratings", kOwner, {{"rating", 0.4}}).status == 200);
  CHECK(h.vault->consumer("marketer").ratings == std::vector<double>{0.2, 0.4});

  const auto syntax = h.submit(kMarketer, "GET energy.consumption RANGE 2024-01-01T00:00:00Z", 1);
  CHECK(syntax.status == 400);
  CHECK(syntax.body["error"] == "syntax-error");
  CHECK(syntax.body.contains("line"));
  CHECK(h.submit(kMarketer, "GET water.flow RANGE 2024-01-01T00:00:00Z..2024-01-02T00:00:00Z", 1).status == 404);
  CHECK(h.call("POST", "/api/requests", kMarketer, Json("nonsense")).status == 400);
  CHECK(h.api->handle(Request{"POST", "/api/requests", {}, std::string("Bearer ") + kMarketer, "{"}).status == 400);
  CHECK(h.call("POST", "/api/ingest/readings", kMeter,
               {{"stream", "energy.consumption"}, {"readings", {{{"t", "2024-01-01T00:00:00Z"}, {"v", 1.0}}}}})
            .status == 200);
  CHECK(h.call("POST", "/api/ingest/readings", kMeter,
               {{"stream", "energy.consumption"}, {"readings", {{{"t", "2023-01-01T00:00:00Z"}, {"v", 1.0}}}}})
            .status == 409);
}

TEST_CASE("context events suspend grants and notify the owner") {
  Harness h(true);
  const std::string id = h.submit(kMarketer, marketer_query(), 0.03).body["id"];
  h.call("POST", "/api/requests/" + id + "/respond", kMarketer, {{"action", "accept_counter"}});
  const Json on = {{"t", "2024-01-01T14:10:00Z"}, {"kind", "device_on"}, {"payload", {{"device", "haemodialysis1"}}}};
  CHECK(h.call("POST", "/api/ingest/events", kMeter, on).status == 200);
  const auto fetch = h.call("GET", "/api/requests/" + id + "/result", kMarketer);
  CHECK(fetch.body["error"] == "grant-inactive");
  const auto notes = h.call("GET", "/api/owner/notifications", kOwner).body;
  const auto& last = notes.back();
  CHECK(last["kind"] == "grant_suspended");
  const auto decisions = h.vault->decisions();
  const auto& reason = decisions.back();
  CHECK(reason.id == last["decision_id"]);
  CHECK(reason.utility <= 0);
  CHECK(reason.outcome == Outcome::deny);

  // Switching off does not re-activate; only the owner can.
  const Json off = {{"t", "2024-01-01T18:10:00Z"}, {"kind", "device_off"}, {"payload", {{"device", "haemodialysis1"}}}};
  h.call("POST", "/api/ingest/events", kMeter, off);
  CHECK(h.vault->grants().front().grant.status == query::GrantStatus::suspended);
  CHECK(h.call("POST", "/api/owner/grants/" + last["grant_id"].get<std::string>() + "/reinstate", kOwner).status == 200);
  CHECK(h.call("GET", "/api/requests/" + id + "/result", kMarketer).status == 200);

  const Json bogus = {{"t", "2024-01-01T18:10:00Z"}, {"kind", "device_off"}, {"payload", {{"device", "stove1"}}}};
  CHECK_FALSE(h.call("POST", "/api/ingest/events", kMeter, bogus).body["warnings"].empty());
}

TEST_CASE("vault state survives a restart") {
  Harness h(true);
  const std::string id = h.submit(kMarketer, marketer_query(), 0.03).body["id"];
  h.call("POST", "/api/requests/" + id + "/respond", kMarketer, {{"action", "accept_counter"}});
  h.call("GET", "/api/requests/" + id + "/result", kMarketer);
  h.submit(kGrid, marketer_query("1m"), 0.2);
  const auto requests = h.vault->requests();
  const auto grants = h.vault->grants();
  const auto notes = h.vault->notifications();
  const auto decisions = h.vault->decisions();
  const auto fetches = h.vault->fetches();
  const auto context = h.vault->context();
  h.open();
  CHECK(h.vault->requests() == requests);
  CHECK(h.vault->grants() == grants);
  CHECK(h.vault->notifications() == notes);
  CHECK(h.vault->decisions() == decisions);
  CHECK(h.vault->fetches() == fetches);
  CHECK(h.vault->context() == context);
  // Ids keep counting.
  CHECK(h.submit(kGrid, marketer_query("1m"), 0.2).body["id"] == "r3");
  CHECK(h.call("GET", "/api/requests/" + id + "/result", kMarketer).status == 200);
}

TEST_CASE("no consumer route exposes owner-side fields") {
  const auto audit = consumer_leak_audit();
  CHECK(audit.consumer_routes == 4);
  CHECK(audit.bodies > 100);
  CHECK(audit.leaks.empty());
  CHECK(audit.gating_failures.empty());
  for (const auto& l : audit.leaks) MESSAGE(l);
}

TEST_CASE("random traffic respects the request lifecycle") {
  for (bool auto_accept : {false, true}) {
    CAPTURE(auto_accept);
    const auto stats = random_traffic(auto_accept, auto_accept ? 11 : 5);
    CHECK(stats.transitions >= 1000);
    CHECK(stats.fetched > 0);
    CHECK(stats.unaudited == 0);
    CHECK(stats.violations.empty());
    for (const auto& v : stats.violations) MESSAGE(v);
  }
}

TEST_CASE("http server serves the api") {
  Harness h(true, false);
  HttpServer server(*h.api);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  const httplib::Headers owner{{"Authorization", std::string("Bearer ") + kOwner}};
  auto res = client.Get("/api/owner/requests", owner);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body).is_array());
  res = client.Get("/api/owner/requests");
  REQUIRE(res);
  CHECK(res->status == 401);
  res = client.Get("/api/owner/requests/r9/preview?period=30m", owner);
  REQUIRE(res);
  CHECK(res->status == 404);
  server.stop();
  t.join();
}
