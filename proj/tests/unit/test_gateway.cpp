#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

#include "doctest.h"
#include "reroute/bench.hpp"
#include "reroute/error.hpp"
#include "reroute/gateway.hpp"
#include "reroute/rng.hpp"

using namespace reroute;

namespace {

// A similarity-weighted scorer with one stored example scores every query at
// that example's label.
std::shared_ptr<const Scorer> constant_scorer(double label) {
  const Vocab v = Vocab::from_tokens(std::vector<std::string>{"what", "is", "2", "+", "?"});
  const HashEmbedder e(8, 0);
  const double other = label == 1.0 ? 0.0 : 1.0;
  const std::vector<PreferenceExample> ex = {{tokenize("what", v), label}, {tokenize("is", v), other}};
  auto p = fit_scorer(ScorerKind::sw, ex, v, e);
  auto& sw = std::get<SwParams>(p.payload);
  sw.embeddings.resize(1);
  sw.labels.resize(1);
  return std::make_shared<const Scorer>(v, e, p);
}

// Brute force over every candidate threshold in the observed scores.
double reference_tau(const std::vector<double>& s, double eps) {
  if (eps == 1.0) return kStrongForAll;
  std::vector<double> cands = s;
  std::sort(cands.begin(), cands.end());
  for (double t : cands) {
    std::size_t c = 0;
    for (double x : s) c += x >= t;
    if (static_cast<double>(c) <= eps * static_cast<double>(s.size())) return t;
  }
  return cands.back() + 1e-9;
}

struct TrainedRouter {
  std::shared_ptr<const Scorer> scorer;
  std::vector<TokenSeq> calibration;
  Vocab vocab;

  static const TrainedRouter& get() {
    static const TrainedRouter r = [] {
      TrainedRouter t;
      const Workload w = gen_workload(900, 5, {}, {400, 200});
      t.vocab = Vocab::build(w.all_texts());
      const HashEmbedder e(64, 0);
      std::vector<PreferenceExample> ex;
      for (const auto* q : w.split(Split::train)) ex.push_back({tokenize(q->text, t.vocab), *q->label});
      FitOptions o;
      o.epochs = 150;
      t.scorer = std::make_shared<const Scorer>(t.vocab, e, fit_scorer(ScorerKind::cls, ex, t.vocab, e, o));
      for (const auto* q : w.split(Split::calibration)) t.calibration.push_back(tokenize(q->text, t.vocab));
      return t;
    }();
    return r;
  }
};

}  // namespace

TEST_CASE("routing decision is strong iff the score reaches the threshold") {
  CHECK(decide(0.6, 0.5) == Decision::strong);
  CHECK(decide(0.5, 0.5) == Decision::strong);
  CHECK(decide(0.4, 0.5) == Decision::weak);
  CHECK(decide(0.0, kStrongForAll) == Decision::strong);

  const auto s = constant_scorer(0.5);
  const TokenSeq q = tokenize("what is 2+2 ?", s->vocab());
  RouterConfig c{s, 0.5};
  CHECK(route(c, q).decision == Decision::strong);
  CHECK(route(c, q).score == 0.5);
  c.tau = 0.6;
  CHECK(route(c, q).decision == Decision::weak);
  c.tau = kStrongForAll;
  CHECK(route(c, q).decision == Decision::strong);
}

TEST_CASE("router configuration is validated") {
  RouterConfig c{nullptr, 0.5};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.scorer = constant_scorer(0.0);
  c.tau = std::nan("");
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.tau = 0.5;
  c.weak_id = c.strong_id;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("calibration examples") {
  const std::vector<double> s = {0.1, 0.2, 0.3, 0.4};
  CHECK(calibrate_scores(s, 0.5) == 0.3);
  CHECK(calibrate_scores(s, 0.0) == doctest::Approx(0.4 + 1e-9).epsilon(1e-15));
  CHECK(calibrate_scores(s, 0.0) > 0.4);
  CHECK(calibrate_scores(s, 1.0) == kStrongForAll);
  CHECK(calibrate_scores(s, 0.25) == 0.4);
  CHECK_THROWS_AS(calibrate_scores(s, 1.5), ValidationError);
  CHECK_THROWS_AS(calibrate_scores(std::vector<double>{}, 0.5), ValidationError);
}

TEST_CASE("calibration agrees with brute force and respects the budget") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(1 + rng.below(30));
    for (double& x : s) x = static_cast<double>(rng.below(10)) / 10.0;
    const double eps = static_cast<double>(rng.below(11)) / 10.0;
    const double tau = calibrate_scores(s, eps);
    CHECK(tau == reference_tau(s, eps));
    CHECK(strong_fraction(s, tau) <= eps + 1e-12);
  }
}

TEST_CASE("threshold is monotone in epsilon") {
  Rng rng(9);
  std::vector<double> s(50);
  for (double& x : s) x = rng.uniform();
  double prev = calibrate_scores(s, 0.0);
  for (int k = 1; k <= 20; ++k) {
    const double tau = calibrate_scores(s, k / 20.0);
    CHECK(tau <= prev);
    prev = tau;
  }
}

TEST_CASE("calibrated threshold holds on held-out queries") {
  const auto& r = TrainedRouter::get();
  const double tau = calibrate(*r.scorer, r.calibration, 0.5);
  const Workload held = gen_workload(1000, 77);
  std::vector<TokenSeq> qs;
  for (const auto& q : held.queries) qs.push_back(tokenize(q.text, r.vocab));
  const auto scores = kernels::evaluate([&](const TokenSeq& q) { return r.scorer->score(q); }, qs);
  const double frac = strong_fraction(scores, tau);
  CHECK(frac >= 0.4);
  CHECK(frac <= 0.6);
  std::vector<Decision> d;
  for (double x : scores) d.push_back(decide(x, tau));
  CHECK(policy_check(d, 0.6));
}

TEST_CASE("policy check counts strong decisions") {
  const std::vector<Decision> d = {Decision::strong, Decision::weak, Decision::weak, Decision::strong};
  CHECK(policy_check(d, 0.5));
  CHECK_FALSE(policy_check(d, 0.49));
  CHECK_THROWS_AS(policy_check(std::vector<Decision>{}, 0.5), ValidationError);
}

TEST_CASE("threshold JSON keeps the -inf sentinel") {
  CHECK(tau_to_json(kStrongForAll) == "-inf");
  CHECK(tau_from_json(tau_to_json(kStrongForAll)) == kStrongForAll);
  CHECK(tau_from_json(tau_to_json(0.25)) == 0.25);
  CHECK_THROWS_AS(tau_from_json(nlohmann::json("high")), ValidationError);
}

TEST_CASE("execute invokes exactly the chosen backend") {
  const auto s = constant_scorer(1.0);
  const BackendMap backends = {{"strong", ModelBackend::stub("STRONG:{input}")},
                               {"weak", ModelBackend::stub("WEAK:{input}")}};
  const TokenSeq q = tokenize("what is 2+2 ?", s->vocab());
  RouterConfig c{s, 0.5};
  auto ex = execute(c, backends, q, "alice");
  CHECK(ex.response == "STRONG:what is 2+2 ?");
  REQUIRE(ex.transcript.steps.size() == 1);
  CHECK(ex.transcript.steps[0].model_id == "strong");
  CHECK(ex.transcript.user == "alice");
  CHECK(ex.transcript.tokens_in == 6);
  CHECK(ex.transcript.tokens_out == split_words(ex.response).size());

  ex = execute(c, backends, q, "alice", Decision::weak);
  CHECK(ex.response == "WEAK:what is 2+2 ?");

  c.tau = 1.5;
  CHECK(execute(c, backends, q).transcript.steps[0].model == Decision::weak);
  CHECK_THROWS_AS(execute(c, BackendMap{{"weak", ModelBackend::stub("x")}}, q), ValidationError);
}

TEST_CASE("a failing backend surfaces the model id") {
  const auto s = constant_scorer(0.0);
  const BackendMap backends = {
      {"strong", ModelBackend::stub("{input}")},
      {"weak", ModelBackend::http({"http://127.0.0.1:9/generate", "", std::chrono::milliseconds(300)})}};
  try {
    execute(RouterConfig{s, 0.5}, backends, tokenize("what", s->vocab()));
    FAIL("expected a backend failure");
  } catch (const BackendFailure& e) {
    CHECK(std::string(e.what()).find("weak") != std::string::npos);
    CHECK(e.transcript().steps.at(0).model_id == "weak");
    CHECK_FALSE(e.transcript().error.empty());
  }
}

TEST_CASE("transcripts round-trip and append to a log") {
  Transcript t;
  t.steps.push_back({Decision::strong, "gpt", "hi there"});
  t.user = "u1";
  t.tokens_in = 2;
  t.tokens_out = 5;
  t.score = 0.75;
  const Transcript r = Transcript::from_json(t.to_json());
  CHECK(r.to_json() == t.to_json());

  const auto path = std::filesystem::temp_directory_path() / "reroute_unit_log" / "t.jsonl";
  std::filesystem::remove_all(path.parent_path());
  {
    TranscriptLog log(path);
    log.append(t);
    log.append(t);
  }
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    CHECK(nlohmann::json::parse(line)["user"] == "u1");
    ++n;
  }
  CHECK(n == 2);
}

TEST_CASE("cost of one strong call") {
  const auto pricing =
      PricingTable::from_json(nlohmann::json::parse(R"({"models": {"strong": {"input": 2.5, "output": 10}}})"));
  Transcript t;
  t.steps.push_back({Decision::strong, "strong", ""});
  t.tokens_in = 1000;
  t.tokens_out = 100;
  const std::vector<Transcript> one = {t};
  const Money m = cost(one, pricing);
  CHECK(m.pico() == 3500000000LL);
  CHECK(m.to_string() == "0.003500");

  const std::vector<Transcript> two = {t, t};
  CHECK(cost(two, pricing) == m * 2);
  CHECK(cost(std::vector<Transcript>{}, pricing) == Money());

  Transcript other = t;
  other.steps[0].model_id = "mystery";
  CHECK_THROWS_AS(cost(std::vector<Transcript>{other}, pricing), ValidationError);
}

TEST_CASE("cost is additive over random transcript lists") {
  Rng rng(4);
  PricingTable p;
  p.models["s"] = {2500000, 10000000};
  p.models["w"] = {150000, 600000};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Transcript> ts(rng.below(20));
    for (auto& t : ts) {
      t.steps.push_back({Decision::weak, rng.bernoulli(0.5) ? "s" : "w", ""});
      t.tokens_in = rng.below(5000);
      t.tokens_out = rng.below(5000);
    }
    const std::size_t cut = ts.empty() ? 0 : rng.below(ts.size() + 1);
    const std::span<const Transcript> all(ts);
    CHECK(cost(all, p) == cost(all.first(cut), p) + cost(all.subspan(cut), p));
  }
}

TEST_CASE("money rounds half away from zero") {
  CHECK(Money::from_pico(500000).micro() == 1);
  CHECK(Money::from_pico(499999).micro() == 0);
  CHECK(Money::from_pico(-500000).micro() == -1);
  CHECK(Money::from_pico(1500000).micro() == 2);
  CHECK(Money::from_pico(-1).to_string() == "0.000000");
}

TEST_CASE("prices parse exactly") {
  CHECK(parse_price_micro(2.5) == 2500000);
  CHECK(parse_price_micro("0.15") == 150000);
  CHECK(parse_price_micro(10) == 10000000);
  CHECK(parse_price_micro("0.000001") == 1);
  CHECK_THROWS_AS(parse_price_micro("0.0000001"), ValidationError);
  CHECK_THROWS_AS(parse_price_micro("-1"), ValidationError);
  CHECK_THROWS_AS(parse_price_micro(true), ValidationError);
  const auto t = PricingTable::from_json(nlohmann::json::parse(R"({"a": {"input": "1.25", "output": 3}})"));
  CHECK(PricingTable::from_json(t.to_json()).models.at("a").input_micro == 1250000);
}
