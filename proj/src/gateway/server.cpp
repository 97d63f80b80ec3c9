#include "httplib.h"
#include "reroute/error.hpp"
#include "reroute/serve.hpp"

namespace reroute {

GatewayServer::GatewayServer(RouterConfig config, BackendMap backends, ServeOptions options)
    : config_(std::move(config)),
      backends_(std::move(backends)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  config_.validate();
  server_->Post("/route", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"body is not JSON"})", "application/json");
      return;
    }
    try {
      const auto out = handle_route(body);
      res.status = out.contains("rejected") ? 403 : 200;
      res.set_content(out.dump(), "application/json");
    } catch (const ValidationError& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 502;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(stats().dump(), "application/json");
  });
}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void GatewayServer::run() { server_->listen_after_bind(); }

void GatewayServer::stop() {
  if (server_) server_->stop();
}

nlohmann::json GatewayServer::handle_route(const nlohmann::json& request) {
  if (!request.is_object() || !request.contains("text") || !request["text"].is_string()) {
    throw ValidationError("request needs a string field \"text\"");
  }
  const auto text = request["text"].get<std::string>();
  const std::string user = request.value("user", "anonymous");
  const TokenSeq query = tokenize(text, config_.scorer->vocab());

  const RouteResult r = route(config_, query);
  bool flagged = false;
  {
    std::lock_guard lock(mutex_);
    if (options_.monitor) flagged = options_.monitor->update(user, r.decision == Decision::strong);
  }
  nlohmann::json out = {{"score", r.score}, {"flagged", flagged}};
  if (flagged && options_.action == FlagAction::reject) {
    out["decision"] = to_string(r.decision);
    out["rejected"] = true;
    return out;
  }
  const std::optional<Decision> forced =
      flagged ? std::optional<Decision>(Decision::weak) : std::nullopt;
  Execution ex;
  try {
    ex = execute(config_, backends_, query, user, forced);
  } catch (const BackendFailure& e) {
    if (options_.log) options_.log->append(e.transcript());
    throw;
  }
  const Decision served = ex.transcript.steps.front().model;
  {
    std::lock_guard lock(mutex_);
    auto& s = stats_[user];
    ++s.queries;
    s.strong += served == Decision::strong ? 1 : 0;
  }
  if (options_.log) options_.log->append(ex.transcript);
  out["decision"] = to_string(served);
  out["response"] = ex.response;
  return out;
}

nlohmann::json GatewayServer::stats() const {
  std::lock_guard lock(mutex_);
  nlohmann::json users = nlohmann::json::object();
  for (const auto& [user, s] : stats_) {
    users[user] = {{"queries", s.queries},
                   {"strong", s.strong},
                   {"strong_fraction", s.queries ? static_cast<double>(s.strong) / static_cast<double>(s.queries) : 0.0}};
  }
  return {{"users", std::move(users)}};
}

}  // namespace reroute
