#include <cmath>
#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "reroute/error.hpp"
#include "reroute/scorers.hpp"

namespace reroute {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw ValidationError("unsupported endpoint URL \"" + url + "\" (expected http://host[:port]/path)");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& body) {
  const std::string text = trim(body);
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() + text.size()) return v;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_number()) return j.get<double>();
    if (j.is_object() && j.contains("score") && j["score"].is_number()) {
      return j["score"].get<double>();
    }
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

}  // namespace

double external_score(const ExternalEndpoint& endpoint, std::string_view text) {
  const auto url = parse_url(endpoint.url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!endpoint.bearer_env.empty()) {
    const char* token = std::getenv(endpoint.bearer_env.c_str());
    if (token == nullptr) {
      throw TransportError(endpoint.url, "environment variable " + endpoint.bearer_env + " is not set");
    }
    client.set_bearer_token_auth(token);
  }
  auto res = client.Post(url.path, std::string(text), "text/plain");
  if (!res) throw TransportError(endpoint.url, "request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(endpoint.url, "HTTP status " + std::to_string(res->status));
  }
  const auto value = parse_number(res->body);
  if (!value || std::isnan(*value)) {
    throw TransportError(endpoint.url, "non-numeric reply \"" + trim(res->body).substr(0, 64) + "\"");
  }
  return std::clamp(*value, 0.0, 1.0);
}

}  // namespace reroute
