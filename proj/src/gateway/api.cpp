#include "pdv/gateway/api.hpp"

#include <sstream>

#include "pdv/core/error.hpp"

namespace pdv::gateway {
namespace {

using Vars = std::map<std::string, std::string>;

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::stringstream in(path);
  std::string seg;
  while (std::getline(in, seg, '/')) {
    if (!seg.empty()) out.push_back(seg);
  }
  return out;
}

std::optional<Vars> match(const std::string& pattern, const std::string& path) {
  const auto p = split_path(pattern);
  const auto s = split_path(path);
  if (p.size() != s.size()) return std::nullopt;
  Vars vars;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() > 2 && p[i].front() == '{' && p[i].back() == '}') {
      vars[p[i].substr(1, p[i].size() - 2)] = s[i];
    } else if (p[i] != s[i]) {
      return std::nullopt;
    }
  }
  return vars;
}

Json parse_body(const Request& r) {
  if (r.body.empty()) return Json::object();
  try {
    return Json::parse(r.body);
  } catch (const Json::exception& e) {
    throw Error(Errc::decode_error, e.what());
  }
}

template <typename T>
Json array_of(const std::vector<T>& values) {
  Json out = Json::array();
  for (const auto& v : values) out.push_back(v);
  return out;
}

Response ok(Json body, int status = 200) { return Response{status, std::move(body)}; }

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::consumer: return "consumer";
    case Role::device: return "device";
    case Role::owner: return "owner";
  }
  return "";
}

int http_status(Errc code) {
  switch (code) {
    case Errc::unauthorized: return 401;
    case Errc::forbidden: return 403;
    case Errc::unknown_consumer:
    case Errc::unknown_request:
    case Errc::unknown_grant:
    case Errc::unknown_stream: return 404;
    case Errc::invalid_state_transition:
    case Errc::precondition_violation:
    case Errc::grant_inactive:
    case Errc::request_denied:
    case Errc::grant_mismatch:
    case Errc::empty_result_query:
    case Errc::out_of_order_timestamp:
    case Errc::duplicate_stream: return 409;
    case Errc::io_error:
    case Errc::uncalibrated_parameter:
    case Errc::not_derived: return 500;
    default: return 400;
  }
}

Json error_body(const Error& e) {
  Json j = {{"error", to_string(e.code())}, {"detail", e.detail()}};
  if (const auto* located = dynamic_cast<const LocatedError*>(&e)) {
    j["line"] = located->line();
    j["column"] = located->column();
  }
  if (const auto* syntax = dynamic_cast<const SyntaxError*>(&e)) j["expected"] = syntax->expected();
  return j;
}

Json consumer_view(const DataRequest& r) {
  return {{"id", r.id}, {"state", to_string(r.state)}, {"counter", r.counter ? Json(*r.counter) : Json()}};
}

Api::Api(Vault& vault) : vault_(vault) {
  auto& v = vault_;
  routes_ = {
      // consumers
      {"POST", "/api/requests", Role::consumer,
       [&v](const Caller& c, const Vars&, const Request& req) {
         const Json b = parse_body(req);
         if (!b.contains("query") || !b["query"].is_string()) throw Error(Errc::decode_error, "query text required");
         const auto r = v.submit(c.id, b["query"].get<std::string>(), decode<BenefitOffer>(b.at("offer")));
         return ok(consumer_view(r), 201);
       }},
      {"GET", "/api/requests/{id}", Role::consumer,
       [&v](const Caller& c, const Vars& vars, const Request&) {
         const auto r = v.request(vars.at("id"));
         if (r.consumer_id != c.id) throw Error(Errc::forbidden, r.id);
         return ok(consumer_view(r));
       }},
      {"POST", "/api/requests/{id}/respond", Role::consumer,
       [&v](const Caller& c, const Vars& vars, const Request& req) {
         const Json b = parse_body(req);
         const auto action = parse_consumer_action(b.value("action", std::string()));
         std::optional<BenefitOffer> offer;
         if (b.contains("offer")) offer = decode<BenefitOffer>(b["offer"]);
         return ok(consumer_view(v.consumer_respond(c.id, vars.at("id"), action, offer)));
       }},
      {"GET", "/api/requests/{id}/result", Role::consumer,
       [&v](const Caller& c, const Vars& vars, const Request&) {
         return ok({{"id", vars.at("id")}, {"results", array_of(v.fetch(c.id, vars.at("id")))}});
       }},
      // devices
      {"POST", "/api/ingest/readings", Role::device,
       [&v](const Caller&, const Vars&, const Request& req) {
         const Json b = parse_body(req);
         const auto readings = decode<std::vector<Reading>>(b.at("readings"));
         v.ingest_readings(b.at("stream").get<std::string>(), readings);
         return ok({{"accepted", readings.size()}});
       }},
      {"POST", "/api/ingest/events", Role::device,
       [&v](const Caller&, const Vars&, const Request& req) {
         const Json b = parse_body(req);
         std::vector<context::ContextEvent> events;
         if (b.contains("events")) events = decode<std::vector<context::ContextEvent>>(b["events"]);
         else events.push_back(decode<context::ContextEvent>(b));
         const auto out = v.ingest_events(events);
         return ok({{"accepted", events.size()}, {"warnings", out.warnings}});
       }},
      // owner
      {"GET", "/api/owner/requests", Role::owner,
       [&v](const Caller&, const Vars&, const Request&) { return ok(array_of(v.requests())); }},
      {"GET", "/api/owner/requests/{id}", Role::owner,
       [&v](const Caller&, const Vars& vars, const Request&) { return ok(v.request(vars.at("id"))); }},
      {"POST", "/api/owner/requests/{id}/decision", Role::owner,
       [&v](const Caller&, const Vars& vars, const Request& req) {
         const Json b = parse_body(req);
         return ok(v.owner_decide(vars.at("id"), parse_owner_action(b.value("action", std::string()))));
       }},
      {"GET", "/api/owner/requests/{id}/preview", Role::owner,
       [&v](const Caller&, const Vars& vars, const Request& req) {
         auto it = req.params.find("period");
         if (it == req.params.end()) throw Error(Errc::invalid_argument, "period parameter required");
         return ok(v.preview(vars.at("id"), parse_duration(it->second)));
       }},
      {"GET", "/api/owner/grants", Role::owner,
       [&v](const Caller&, const Vars&, const Request&) { return ok(array_of(v.grants())); }},
      {"POST", "/api/owner/grants/{id}/revoke", Role::owner,
       [&v](const Caller&, const Vars& vars, const Request&) { return ok(v.revoke_grant(vars.at("id"))); }},
      {"POST", "/api/owner/grants/{id}/reinstate", Role::owner,
       [&v](const Caller&, const Vars& vars, const Request&) { return ok(v.reinstate_grant(vars.at("id"))); }},
      {"GET", "/api/owner/notifications", Role::owner,
       [&v](const Caller&, const Vars&, const Request&) { return ok(array_of(v.notifications())); }},
      {"POST", "/api/owner/notifications/{id}/read", Role::owner,
       [&v](const Caller&, const Vars& vars, const Request&) {
         v.mark_read(vars.at("id"));
         return ok({{"id", vars.at("id")}, {"read", true}});
       }},
      {"GET", "/api/owner/policy", Role::owner,
       [&v](const Caller&, const Vars&, const Request&) { return ok(v.policy()); }},
      {"PUT", "/api/owner/policy", Role::owner,
       [&v](const Caller&, const Vars&, const Request& req) {
         const auto policy = decode<OwnerPolicy>(parse_body(req));
         if (const auto violations = validate_policy(policy); !violations.empty()) {
           Json list = Json::array();
           for (const auto& x : violations) list.push_back({{"path", x.path}, {"message", x.message}});
           return Response{400, {{"error", "invalid-policy"}, {"violations", list}}};
         }
         v.set_policy(policy);
         return ok(policy);
       }},
      {"GET", "/api/owner/context", Role::owner,
       [&v](const Caller&, const Vars&, const Request&) { return ok(v.context()); }},
      {"GET", "/api/owner/audit", Role::owner,
       [&v](const Caller&, const Vars&, const Request&) {
         return ok({{"decisions", array_of(v.decisions())}, {"fetches", array_of(v.fetches())}});
       }},
      {"POST", "/api/consumers/{id}/ratings", Role::owner,
       [&v](const Caller&, const Vars& vars, const Request& req) {
         const Json b = parse_body(req);
         if (!b.contains("rating") || !b["rating"].is_number()) throw Error(Errc::decode_error, "numeric rating required");
         v.rate(vars.at("id"), b["rating"].get<double>());
         return ok(v.consumer(vars.at("id")));
       }},
  };
}

std::optional<Caller> Api::authenticate(const std::string& authorization) const {
  constexpr std::string_view prefix = "Bearer ";
  if (authorization.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  const std::string token = authorization.substr(prefix.size());
  if (token.empty()) return std::nullopt;
  const auto& cfg = vault_.config();
  if (token == cfg.owner_token) return Caller{Role::owner, cfg.owner};
  for (const auto& c : cfg.consumers) {
    if (token == c.token) return Caller{Role::consumer, c.consumer.id};
  }
  for (const auto& d : cfg.devices) {
    if (token == d.token) return Caller{Role::device, d.id};
  }
  return std::nullopt;
}

Response Api::handle(const Request& request) const {
  try {
    bool path_known = false;
    for (const auto& route : routes_) {
      auto vars = match(route.pattern, request.path);
      if (!vars) continue;
      path_known = true;
      if (route.method != request.method) continue;
      const auto caller = authenticate(request.authorization);
      if (!caller) throw Error(Errc::unauthorized, "missing or unknown bearer token");
      if (caller->role != route.role) throw Error(Errc::forbidden, "route needs the " + std::string(to_string(route.role)) + " role");
      return route.handler(*caller, *vars, request);
    }
    if (path_known) return Response{405, {{"error", "method-not-allowed"}}};
    return Response{404, {{"error", "not-found"}, {"detail", request.path}}};
  } catch (const Error& e) {
    return Response{http_status(e.code()), error_body(e)};
  } catch (const std::exception& e) {
    return Response{500, {{"error", "internal"}, {"detail", e.what()}}};
  }
}

}  // namespace pdv::gateway
