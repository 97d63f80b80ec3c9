#include <memory>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "reroute/error.hpp"
#include "reroute/serve.hpp"

using namespace reroute;

namespace {

std::shared_ptr<const Scorer> always(double label) {
  const Vocab v = Vocab::from_tokens(std::vector<std::string>{"hello", "there"});
  const HashEmbedder e(8, 0);
  const std::vector<PreferenceExample> ex = {{tokenize("hello", v), label},
                                             {tokenize("there", v), label == 1.0 ? 0.0 : 1.0}};
  auto p = fit_scorer(ScorerKind::sw, ex, v, e);
  auto& sw = std::get<SwParams>(p.payload);
  sw.embeddings.resize(1);
  sw.labels.resize(1);
  return std::make_shared<const Scorer>(v, e, p);
}

BackendMap stubs() {
  return {{"strong", ModelBackend::stub("S:{input}")}, {"weak", ModelBackend::stub("W:{input}")}};
}

}  // namespace

TEST_CASE("route handler returns decision, score and response") {
  GatewayServer g(RouterConfig{always(1.0), 0.5}, stubs());
  const auto out = g.handle_route({{"text", "hello there"}, {"user", "u"}});
  CHECK(out["decision"] == "strong");
  CHECK(out["score"] == 1.0);
  CHECK(out["flagged"] == false);
  CHECK(out["response"] == "S:hello there");
  const auto st = g.stats();
  CHECK(st["users"]["u"]["queries"] == 1);
  CHECK(st["users"]["u"]["strong_fraction"] == 1.0);
  CHECK_THROWS_AS(g.handle_route({{"txt", "x"}}), ValidationError);
}

TEST_CASE("a flagged user is forced to the weak model") {
  ServeOptions o;
  o.monitor = UserMonitor(3, 0.5, 0.1);
  GatewayServer g(RouterConfig{always(1.0), 0.5}, stubs(), o);
  for (int i = 0; i < 2; ++i) CHECK(g.handle_route({{"text", "hello"}, {"user", "m"}})["decision"] == "strong");
  const auto out = g.handle_route({{"text", "hello"}, {"user", "m"}});
  CHECK(out["flagged"] == true);
  CHECK(out["decision"] == "weak");
  CHECK(out["response"] == "W:hello");
  CHECK(g.stats()["users"]["m"]["strong"] == 2);
}

TEST_CASE("http endpoints answer, and rejection maps to 403") {
  ServeOptions o;
  o.monitor = UserMonitor(2, 0.5, 0.1);
  o.action = FlagAction::reject;
  GatewayServer g(RouterConfig{always(1.0), 0.5}, stubs(), o);
  const int port = g.bind("127.0.0.1", 0);
  std::thread t([&] { g.run(); });
  httplib::Client c("127.0.0.1", port);
  c.set_connection_timeout(2, 0);
  for (int i = 0; i < 50; ++i) {
    if (c.Get("/stats")) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  auto r1 = c.Post("/route", R"({"text": "hello", "user": "x"})", "application/json");
  REQUIRE(r1);
  CHECK(r1->status == 200);
  auto r2 = c.Post("/route", R"({"text": "hello", "user": "x"})", "application/json");
  REQUIRE(r2);
  CHECK(r2->status == 403);
  CHECK(nlohmann::json::parse(r2->body)["rejected"] == true);
  auto bad = c.Post("/route", "not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto st = c.Get("/stats");
  REQUIRE(st);
  CHECK(nlohmann::json::parse(st->body)["users"]["x"]["queries"] == 1);
  g.stop();
  t.join();
}
