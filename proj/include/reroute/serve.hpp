#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "reroute/gateway.hpp"
#include "reroute/shield.hpp"

namespace httplib {
class Server;
}

namespace reroute {

struct ServeOptions {
  std::optional<UserMonitor> monitor;
  FlagAction action = FlagAction::force_weak;
  std::shared_ptr<TranscriptLog> log;
};

// HTTP front end for one router:
//   POST /route {"text": ..., "user"?: ...} -> {"decision", "score", "response", ...}
//   GET  /stats -> {"users": {"<id>": {"queries", "strong", "strong_fraction"}}}
class GatewayServer {
 public:
  GatewayServer(RouterConfig config, BackendMap backends, ServeOptions options = {});
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  // Returns the bound port (an ephemeral one when port == 0).
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void run();
  void stop();

  // Transport-free handlers, also used by the HTTP routes. Throws
  // ValidationError for malformed requests.
  nlohmann::json handle_route(const nlohmann::json& request);
  [[nodiscard]] nlohmann::json stats() const;

 private:
  struct UserStats {
    std::uint64_t queries = 0;
    std::uint64_t strong = 0;
  };

  RouterConfig config_;
  BackendMap backends_;
  ServeOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, UserStats> stats_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace reroute
