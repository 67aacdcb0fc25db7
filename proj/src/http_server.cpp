#include "madp/http_server.hpp"

#include <regex>
#include <stdexcept>

#include "httplib.h"
#include "madp/sustainability.hpp"

namespace madp {

namespace {

HttpResponse error(int status, const std::string& message) {
  return {status, json{{"code", status}, {"message", message}}};
}

json sustainability_json(const std::string& scenario) {
  namespace s = sustainability;
  auto report = s::scenario_report(scenario);
  json j = report.display();
  j["scenario"] = scenario;
  if (scenario != "manual") {
    auto saved = s::savings(report, s::scenario_report("manual"));
    j["savings_vs_manual"] = s::to_json(saved);
    auto eq = s::equivalences(saved);
    j["equivalences"] = {{"trees", eq.trees},
                         {"cars", eq.cars},
                         {"homes", eq.homes},
                         {"person_water_days", eq.person_water_days}};
  }
  return j;
}

HttpResponse route(Engine& engine, const HttpRequest& req) {
  static const std::regex kDocument(R"(^/documents/([^/]+)$)");
  static const std::regex kCorrections(R"(^/documents/([^/]+)/corrections$)");
  static const std::regex kConfirm(R"(^/documents/([^/]+)/confirm$)");
  static const std::regex kPrompts(R"(^/prompts/([^/]+)/versions$)");
  std::smatch m;
  const std::string& path = req.path;

  if (req.method == "GET") {
    if (path == "/queue") {
      std::optional<TaskStatus> status;
      if (auto it = req.query.find("status"); it != req.query.end() && !it->second.empty()) {
        status = task_status_from_string(it->second);
        if (!status)
          return error(400, "invalid status '" + it->second +
                                "' (expected pending, in_progress or resolved)");
      }
      return {200, engine.queue_json(status)};
    }
    if (path == "/stats") return {200, engine.stats_json()};
    if (path == "/prompts") return {200, engine.prompt_heads_json()};
    if (std::regex_match(path, m, kDocument)) return {200, engine.document_json(m[1])};
    if (std::regex_match(path, m, kPrompts)) {
      CategoryKey key;
      try {
        key = CategoryKey::parse(m[1]);
      } catch (const std::exception& e) {
        return error(400, e.what());
      }
      return {200, engine.prompt_versions_json(key)};
    }
    if (path == "/sustainability/report") {
      auto it = req.query.find("scenario");
      std::string scenario = it == req.query.end() ? "ai_hitl" : it->second;
      try {
        return {200, sustainability_json(scenario)};
      } catch (const std::invalid_argument& e) {
        return error(400, e.what());
      }
    }
  } else if (req.method == "POST") {
    if (std::regex_match(path, m, kCorrections)) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        return error(400, "request body is not JSON");
      }
      if (!body.is_object() || !body.contains("field") || !body["field"].is_string() ||
          !body.contains("value") || !body["value"].is_string())
        return error(400, "expected {\"field\": string, \"value\": string}");
      return {200, engine.correct(m[1], body["field"], body["value"], req.reviewer_id)};
    }
    if (std::regex_match(path, m, kConfirm)) return {200, engine.confirm(m[1], req.reviewer_id)};
  }
  return error(404, "no route for " + req.method + " " + path);
}

}  // namespace

HttpResponse handle_request(Engine& engine, const HttpRequest& request) {
  try {
    return route(engine, request);
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  } catch (const ConflictError& e) {
    return error(409, e.what());
  } catch (const ValidationError& e) {
    return error(422, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

bool serve(Engine& engine, const std::string& host, int port) {
  httplib::Server server;
  auto dispatch = [&engine](const httplib::Request& in, httplib::Response& out) {
    HttpRequest req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query[k] = v;
    req.body = in.body;
    if (in.has_header("X-Reviewer-Id")) req.reviewer_id = in.get_header_value("X-Reviewer-Id");
    HttpResponse res = handle_request(engine, req);
    out.status = res.status;
    out.set_header("Access-Control-Allow-Origin", "*");
    out.set_content(res.body.dump(), "application/json");
  };
  server.Get(R"(/.*)", dispatch);
  server.Post(R"(/.*)", dispatch);
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& out) {
    out.set_header("Access-Control-Allow-Origin", "*");
    out.set_header("Access-Control-Allow-Headers", "Content-Type, X-Reviewer-Id");
    out.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    out.status = 204;
  });
  return server.listen(host, port);
}

}  // namespace madp
