#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pdv/core/error.hpp"
#include "pdv/core/json.hpp"
#include "pdv/gateway/vault.hpp"

namespace pdv::gateway {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> params;
  /// Value of the Authorization header.
  std::string authorization;
  std::string body;
};

struct Response {
  int status = 200;
  Json body;
};

enum class Role { consumer, device, owner };
std::string_view to_string(Role r);

struct Caller {
  Role role;
  std::string id;
};

struct Route {
  std::string method;
  /// Path with `{name}` placeholders, e.g. /api/requests/{id}.
  std::string pattern;
  Role role;
  std::function<Response(const Caller&, const std::map<std::string, std::string>& vars, const Request&)> handler;
};

/// HTTP status for an error code.
int http_status(Errc code);
Json error_body(const Error& e);

/// Consumer-visible projection of a request: id, state and counter terms.
Json consumer_view(const DataRequest& r);

/// Transport-independent HTTP surface of a vault. Every route requires a
/// bearer token of its role.
class Api {
 public:
  explicit Api(Vault& vault);

  Response handle(const Request& request) const;
  const std::vector<Route>& routes() const { return routes_; }

 private:
  std::optional<Caller> authenticate(const std::string& authorization) const;

  Vault& vault_;
  std::vector<Route> routes_;
};

}  // namespace pdv::gateway
