#include <regex>

#include "httplib.h"
#include "reroute/error.hpp"
#include "reroute/gateway.hpp"

namespace reroute {

nlohmann::json Transcript::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"model", to_string(s.model)}, {"model_id", s.model_id}, {"input", s.input}});
  }
  nlohmann::json j = {{"steps", std::move(steps_json)},
                      {"user", user},
                      {"tokens_in", tokens_in},
                      {"tokens_out", tokens_out},
                      {"score", score}};
  if (!error.empty()) j["error"] = error;
  return j;
}

Transcript Transcript::from_json(const nlohmann::json& j) {
  Transcript t;
  try {
    for (const auto& s : j.at("steps")) {
      const auto model = s.at("model").get<std::string>();
      if (model != "weak" && model != "strong") throw ValidationError("bad model index " + model);
      t.steps.push_back({model == "strong" ? Decision::strong : Decision::weak,
                         s.at("model_id").get<std::string>(), s.value("input", "")});
    }
    t.user = j.value("user", "");
    t.tokens_in = j.at("tokens_in").get<std::uint64_t>();
    t.tokens_out = j.at("tokens_out").get<std::uint64_t>();
    t.score = j.value("score", 0.0);
    t.error = j.value("error", "");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed transcript: ") + e.what());
  }
  return t;
}

namespace {

std::string expand(std::string_view tmpl, std::string_view input) {
  std::string out;
  std::size_t pos = 0;
  constexpr std::string_view kSlot = "{input}";
  while (true) {
    const auto hit = tmpl.find(kSlot, pos);
    if (hit == std::string_view::npos) break;
    out.append(tmpl.substr(pos, hit - pos));
    out.append(input);
    pos = hit + kSlot.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string http_generate(const ExternalEndpoint& ep, std::string_view model_id,
                          std::string_view input) {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(ep.url, m, re)) throw ValidationError("unsupported backend URL " + ep.url);
  httplib::Client client(m[1].str());
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout).count();
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  if (!ep.bearer_env.empty()) {
    if (const char* tok = std::getenv(ep.bearer_env.c_str())) client.set_bearer_token_auth(tok);
  }
  const nlohmann::json body = {{"model", model_id}, {"text", input}};
  auto res = client.Post(m[2].matched ? m[2].str() : "/", body.dump(), "application/json");
  if (!res) throw TransportError(ep.url, "request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(ep.url, "HTTP status " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    if (j.is_object() && j.contains("response") && j["response"].is_string()) {
      return j["response"].get<std::string>();
    }
  } catch (const nlohmann::json::exception&) {
  }
  return res->body;
}

}  // namespace

std::string invoke_backend(const ModelBackend& backend, std::string_view model_id,
                           std::string_view input) {
  if (backend.kind == ModelBackend::Kind::stub) return expand(backend.stub_template, input);
  return http_generate(backend.endpoint, model_id, input);
}

Execution execute(const RouterConfig& config, const BackendMap& backends, const TokenSeq& query,
                  std::string_view user, std::optional<Decision> forced) {
  config.validate();
  for (const auto& id : {config.strong_id, config.weak_id}) {
    if (!backends.contains(id)) throw ValidationError("no backend registered for model " + id);
  }
  const RouteResult r = route(config, query);
  const Decision decision = forced.value_or(r.decision);
  const std::string& model_id = decision == Decision::strong ? config.strong_id : config.weak_id;
  const std::string input =
      query.surface.empty() ? detokenize(query.ids, config.scorer->vocab()) : query.surface;

  Execution ex;
  ex.transcript.steps.push_back({decision, model_id, input});
  ex.transcript.user = std::string(user);
  ex.transcript.score = r.score;
  ex.transcript.tokens_in = split_words(input).size();
  try {
    ex.response = invoke_backend(backends.find(model_id)->second, model_id, input);
  } catch (const std::exception& e) {
    ex.transcript.error = std::string("model ") + model_id + ": " + e.what();
    throw BackendFailure(ex.transcript, ex.transcript.error);
  }
  ex.transcript.tokens_out = split_words(ex.response).size();
  return ex;
}

TranscriptLog::TranscriptLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open transcript log " + path.string());
}

void TranscriptLog::append(const Transcript& t) {
  const std::string line = t.to_json().dump() + "\n";
  std::lock_guard lock(mutex_);
  out_ << line;
  out_.flush();
}

}  // namespace reroute
