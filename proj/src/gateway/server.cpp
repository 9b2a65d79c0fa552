#include "pdv/gateway/server.hpp"

#include <httplib.h>

namespace pdv::gateway {

struct HttpServer::Impl {
  explicit Impl(const Api& a) : api(a) {}
  const Api& api;
  httplib::Server server;
};

HttpServer::HttpServer(const Api& api) : impl_(std::make_unique<Impl>(api)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.params[k] = v;
    r.authorization = req.get_header_value("Authorization");
    r.body = req.body;
    const auto out = impl_->api.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  const std::string all = R"(/.*)";
  impl_->server.Get(all, handler);
  impl_->server.Post(all, handler);
  impl_->server.Put(all, handler);
  impl_->server.Delete(all, handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace pdv::gateway
