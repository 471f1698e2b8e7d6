#include <httplib.h>

#include "tabula/error.hpp"
#include "tabula/http_api.hpp"

namespace tabula {

namespace {

// Served at / when no static directory is given.
constexpr const char* kFallbackPage = R"(<!doctype html>
<meta charset="utf-8">
<title>Tabula</title>
<p>Tabula engine. The state is at <a href="/api/state">/api/state</a>,
metrics at <a href="/api/metrics">/api/metrics</a>.</p>
)";

void send(httplib::Response& res, const HttpReply& r) {
  res.status = r.status;
  res.set_content(r.body, r.contentType);
}

}  // namespace

struct HttpServer::Impl {
  Session& session;
  ServeOptions options;
  httplib::Server server;
  int port = -1;

  Impl(Session& s, ServeOptions o) : session(s), options(std::move(o)) {}
};

HttpServer::HttpServer(Session& session, ServeOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {
  auto& svr = impl_->server;
  auto& s = impl_->session;
  svr.Get("/api/state", [&s](const httplib::Request&, httplib::Response& res) { send(res, s.state()); });
  svr.Get("/api/metrics", [&s](const httplib::Request&, httplib::Response& res) { send(res, s.metrics()); });
  svr.Get("/api/export.csv", [&s](const httplib::Request& req, httplib::Response& res) {
    send(res, s.export_csv(req.get_param_value("mode")));
  });
  svr.Post("/api/instance/ops", [&s](const httplib::Request& req, httplib::Response& res) {
    send(res, s.post_instance_ops(req.body));
  });
  svr.Post("/api/model/ops", [&s](const httplib::Request& req, httplib::Response& res) {
    send(res, s.post_model_ops(req.body));
  });

  const auto& dir = impl_->options.staticDir;
  if (!dir.empty()) {
    if (!svr.set_mount_point("/", dir.string()))
      throw Error(ErrorKind::Io, "static directory " + dir.string() + " does not exist");
  } else {
    svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kFallbackPage, "text/html; charset=utf-8");
    });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& i = *impl_;
  if (i.options.port == 0)
    i.port = i.server.bind_to_any_port(i.options.host);
  else
    i.port = i.server.bind_to_port(i.options.host, i.options.port) ? i.options.port : -1;
  if (i.port < 0)
    throw Error(ErrorKind::Io, "cannot listen on " + i.options.host + ":" + std::to_string(i.options.port));
  return i.port;
}

void HttpServer::run() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace tabula
