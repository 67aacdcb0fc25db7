#pragma once

// JSON-over-HTTP front of the review service. Handlers are plain functions of
// (method, path, query, body) so tests can exercise the API without sockets;
// serve() binds them to an httplib server.

#include <map>
#include <string>

#include "madp/engine.hpp"

namespace madp {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string reviewer_id = "reviewer";
};

struct HttpResponse {
  int status = 200;
  json body;
};

/// Routes one request. Errors come back as {code, message} with 400, 404,
/// 409 or 422.
HttpResponse handle_request(Engine& engine, const HttpRequest& request);

/// Blocks until the server stops. Returns false when the port cannot be bound.
bool serve(Engine& engine, const std::string& host, int port);

}  // namespace madp
