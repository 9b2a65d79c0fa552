#pragma once

#include <memory>
#include <string>

#include "pdv/gateway/api.hpp"

namespace pdv::gateway {

/// Serves an Api over HTTP/1.1.
class HttpServer {
 public:
  explicit HttpServer(const Api& api);
  ~HttpServer();

  /// Binds; port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pdv::gateway
