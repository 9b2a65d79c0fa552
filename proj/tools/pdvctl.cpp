#include <CLI11.hpp>
#include <httplib.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "pdv/core/error.hpp"
#include "pdv/gateway/api.hpp"
#include "pdv/gateway/server.hpp"
#include "pdv/sim/home.hpp"

using namespace pdv;
using namespace pdv::gateway;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Json> read_jsonl(const std::string& path) {
  std::vector<Json> out;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw Error(Errc::decode_error, path + ": " + e.what());
    }
  }
  return out;
}

/// Talks to a running gateway, or to an in-process one over the vault state.
class Client {
 public:
  Client(const std::string& config_path, const std::string& state, const std::string& url) {
    config_ = load_config(config_path);
    if (!state.empty()) config_.state_dir = state;
    if (!url.empty()) {
      remote_ = std::make_unique<httplib::Client>(url);
      remote_->set_read_timeout(60, 0);
    }
  }

  const Config& config() const { return config_; }

  std::string consumer_token(const std::string& id) const {
    for (const auto& c : config_.consumers) {
      if (c.consumer.id == id) return c.token;
    }
    throw Error(Errc::unknown_consumer, id);
  }

  std::string device_token() const {
    if (config_.devices.empty()) throw Error(Errc::invalid_argument, "config lists no devices");
    return config_.devices.front().token;
  }

  Response call(const std::string& method, const std::string& path, const std::string& token, const Json& body = {},
                std::map<std::string, std::string> params = {}) {
    const std::string text = body.is_null() ? "" : body.dump();
    if (!remote_) {
      if (!vault_) {
        vault_ = std::make_unique<Vault>(config_);
        api_ = std::make_unique<Api>(*vault_);
      }
      return api_->handle(Request{method, path, std::move(params), "Bearer " + token, text});
    }
    httplib::Headers headers{{"Authorization", "Bearer " + token}};
    httplib::Result res{nullptr, httplib::Error::Unknown};
    if (method == "GET") {
      httplib::Params p(params.begin(), params.end());
      res = remote_->Get(path, p, headers);
    } else if (method == "PUT") {
      res = remote_->Put(path, headers, text, "application/json");
    } else {
      res = remote_->Post(path, headers, text, "application/json");
    }
    if (!res) throw Error(Errc::io_error, "request failed: " + httplib::to_string(res.error()));
    return Response{res->status, res->body.empty() ? Json() : Json::parse(res->body)};
  }

  Vault& vault() {
    if (!vault_) {
      vault_ = std::make_unique<Vault>(config_);
      api_ = std::make_unique<Api>(*vault_);
    }
    return *vault_;
  }
  const Api& api() {
    vault();
    return *api_;
  }

 private:
  Config config_;
  std::unique_ptr<httplib::Client> remote_;
  std::unique_ptr<Vault> vault_;
  std::unique_ptr<Api> api_;
};

int print(const Response& r) {
  (r.status < 300 ? std::cout : std::cerr) << r.body.dump(2) << '\n';
  return r.status < 300 ? 0 : 1;
}

BenefitOffer offer_of(const std::string& category, double value, const std::string& description) {
  return BenefitOffer{parse_benefit_category(category), value, description};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personal data vault control"};
  app.require_subcommand(1);
  std::string config_path = "config.json";
  std::string state;
  std::string url;
  app.add_option("-c,--config", config_path, "Gateway config file");
  app.add_option("--state", state, "Override the config's state directory");
  app.add_option("--url", url, "Talk to a running gateway instead of the local state");

  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* ingest = app.add_subcommand("ingest", "Append JSON-lines readings to a stream");
  std::string ingest_file;
  std::string stream = "energy.consumption";
  ingest->add_option("file", ingest_file)->required();
  ingest->add_option("--stream", stream);

  auto* gen = app.add_subcommand("gen-home", "Generate a simulated trace as JSON lines");
  std::string home_file;
  std::string period_text = "15s";
  std::string out_file;
  std::optional<std::uint64_t> seed;
  gen->add_option("fixture", home_file)->required();
  gen->add_option("--period", period_text);
  gen->add_option("-o,--out", out_file);
  gen->add_option("--seed", seed);

  auto* request = app.add_subcommand("request", "Submit a query as a consumer");
  std::string query_file;
  std::string consumer;
  std::string category = "financial";
  double value = 0;
  std::string description;
  request->add_option("query_file", query_file)->required();
  request->add_option("--consumer", consumer)->required();
  request->add_option("--category", category);
  request->add_option("--value", value)->required();
  request->add_option("--description", description);

  auto* status = app.add_subcommand("status", "Show a request as its consumer sees it");
  std::string request_id;
  status->add_option("id", request_id)->required();
  status->add_option("--consumer", consumer)->required();

  auto* respond = app.add_subcommand("respond", "Answer a counter-offer as a consumer");
  std::string consumer_action;
  respond->add_option("id", request_id)->required();
  respond->add_option("--consumer", consumer)->required();
  respond->add_option("--action", consumer_action)->required()->check(
      CLI::IsMember({"accept_counter", "raise_offer", "withdraw"}));
  respond->add_option("--category", category);
  auto* raise_value = respond->add_option("--value", value);

  auto* fetch = app.add_subcommand("fetch", "Fetch the released data of a request");
  fetch->add_option("id", request_id)->required();
  fetch->add_option("--consumer", consumer)->required();

  auto* decide = app.add_subcommand("decide", "Accept, deny or counter a request as the owner");
  std::string owner_action;
  decide->add_option("id", request_id)->required();
  decide->add_option("--action", owner_action)->required()->check(CLI::IsMember({"accept", "deny", "counter"}));

  auto* preview = app.add_subcommand("preview", "Utility of a request at another sampling period");
  preview->add_option("id", request_id)->required();
  preview->add_option("--period", period_text)->required();

  auto* replay = app.add_subcommand("replay-events", "Feed JSON-lines context events to the monitor");
  std::string events_file;
  replay->add_option("file", events_file)->required();

  auto* audit = app.add_subcommand("audit", "Print decision records and releases");
  auto* requests = app.add_subcommand("requests", "List requests with their assessments");
  auto* grants = app.add_subcommand("grants", "List grants");
  auto* notifications = app.add_subcommand("notifications", "List owner notifications");

  auto* revoke = app.add_subcommand("revoke", "Revoke a grant");
  std::string grant_id;
  revoke->add_option("grant", grant_id)->required();

  auto* rate = app.add_subcommand("rate", "Record a feedback rating for a consumer");
  double rating = 0;
  rate->add_option("consumer", consumer)->required();
  rate->add_option("rating", rating)->required();

  auto* policy = app.add_subcommand("policy", "Replace the owner policy");
  std::string policy_file;
  policy->add_option("file", policy_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto home = sim::load_home(home_file);
      if (seed) home.seed = *seed;
      const auto trace = sim::generate_trace(home, parse_duration(period_text));
      std::ofstream file;
      if (!out_file.empty()) {
        file.open(out_file);
        if (!file) throw Error(Errc::io_error, "cannot write " + out_file);
      }
      std::ostream& out = out_file.empty() ? std::cout : file;
      for (const auto& r : trace.readings) out << Json(r).dump() << '\n';
      return 0;
    }

    Client client(config_path, state, url);
    const std::string owner = client.config().owner_token;

    if (*serve) {
      HttpServer server(client.api());
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
      std::cerr << "listening on " << host << ":" << bound << '\n';
      server.listen();
      return 0;
    }
    if (*ingest) {
      const auto lines = read_jsonl(ingest_file);
      constexpr std::size_t kBatch = 2000;
      std::size_t total = 0;
      for (std::size_t i = 0; i < lines.size(); i += kBatch) {
        Json batch = Json::array();
        for (std::size_t k = i; k < std::min(lines.size(), i + kBatch); ++k) batch.push_back(lines[k]);
        const auto r = client.call("POST", "/api/ingest/readings", client.device_token(),
                                   {{"stream", stream}, {"readings", batch}});
        if (r.status >= 300) return print(r);
        total += batch.size();
      }
      std::cout << Json{{"stream", stream}, {"accepted", total}}.dump(2) << '\n';
      return 0;
    }
    if (*request) {
      const Json body = {{"query", read_text(query_file)}, {"offer", offer_of(category, value, description)}};
      return print(client.call("POST", "/api/requests", client.consumer_token(consumer), body));
    }
    if (*status) return print(client.call("GET", "/api/requests/" + request_id, client.consumer_token(consumer)));
    if (*respond) {
      Json body = {{"action", consumer_action}};
      if (*raise_value) body["offer"] = offer_of(category, value, description);
      return print(client.call("POST", "/api/requests/" + request_id + "/respond", client.consumer_token(consumer), body));
    }
    if (*fetch) return print(client.call("GET", "/api/requests/" + request_id + "/result", client.consumer_token(consumer)));
    if (*decide) {
      return print(client.call("POST", "/api/owner/requests/" + request_id + "/decision", owner, {{"action", owner_action}}));
    }
    if (*preview) {
      return print(client.call("GET", "/api/owner/requests/" + request_id + "/preview", owner, {},
                               {{"period", period_text}}));
    }
    if (*replay) {
      Json events = Json::array();
      for (auto& e : read_jsonl(events_file)) events.push_back(std::move(e));
      return print(client.call("POST", "/api/ingest/events", client.device_token(), {{"events", events}}));
    }
    if (*audit) return print(client.call("GET", "/api/owner/audit", owner));
    if (*requests) return print(client.call("GET", "/api/owner/requests", owner));
    if (*grants) return print(client.call("GET", "/api/owner/grants", owner));
    if (*notifications) return print(client.call("GET", "/api/owner/notifications", owner));
    if (*revoke) return print(client.call("POST", "/api/owner/grants/" + grant_id + "/revoke", owner));
    if (*rate) return print(client.call("POST", "/api/consumers/" + consumer + "/ratings", owner, {{"rating", rating}}));
    if (*policy) return print(client.call("PUT", "/api/owner/policy", owner, Json::parse(read_text(policy_file))));
  } catch (const Error& e) {
    std::cerr << error_body(e).dump(2) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
