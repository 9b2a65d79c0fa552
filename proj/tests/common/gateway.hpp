#pragma once

#include <memory>
#include <string>

#include "../unit/test_util.hpp"
#include "pdv/gateway/api.hpp"
#include "pdv/sim/home.hpp"

namespace pdv::testing::gateway {

using namespace pdv::gateway;

inline constexpr const char* kOwner = "alice-owner-token";
inline constexpr const char* kMarketer = "marketer-token";
inline constexpr const char* kGrid = "grid-token";
inline constexpr const char* kMeter = "meter-token";

inline std::string marketer_query(const char* sample = "15s") {
  return std::string("GET energy.consumption RANGE 2024-01-01T00:00:00Z..2024-01-02T00:00:00Z SAMPLE ") + sample;
}

/// Alice's vault in a temp dir with a clock that ticks one second per read.
struct Harness {
  explicit Harness(bool auto_accept, bool with_trace = true) {
    config = load_config(source_path("fixtures/alice/config.json"));
    config.state_dir = dir.path() / "state";
    config.auto_accept = auto_accept;
    open();
    if (with_trace) {
      const auto home = sim::load_home(source_path("fixtures/homes/alice_home.json"));
      vault->ingest_readings("energy.consumption", sim::generate_trace(home, Duration{15}).readings);
    }
  }

  void open() {
    api.reset();
    vault.reset();
    auto tick = std::make_shared<long>(0);
    vault = std::make_unique<Vault>(config, [tick] {
      return parse_rfc3339("2024-01-02T00:00:00Z") + std::chrono::seconds{(*tick)++};
    });
    api = std::make_unique<Api>(*vault);
  }

  Response call(const std::string& method, const std::string& path, const std::string& token, const Json& body = {},
                std::map<std::string, std::string> params = {}) const {
    return api->handle(Request{method, path, std::move(params), token.empty() ? "" : "Bearer " + token,
                               body.is_null() ? "" : body.dump()});
  }

  Response submit(const std::string& token, const std::string& query, double value) const {
    return call("POST", "/api/requests", token,
                {{"query", query}, {"offer", {{"category", "financial"}, {"declared_value", value}}}});
  }

  TempDir dir;
  Config config;
  std::unique_ptr<Vault> vault;
  std::unique_ptr<Api> api;
};

}  // namespace pdv::testing::gateway
