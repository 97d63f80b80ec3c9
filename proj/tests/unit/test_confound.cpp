#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "reroute/confound.hpp"
#include "reroute/error.hpp"

using namespace reroute;

namespace {

Vocab toy_vocab() { return Vocab::from_tokens(std::vector<std::string>{"!", "a", "b", "c", "zz"}); }

double share_of(const TokenSeq& s, TokenId id) {
  if (s.empty()) return 0.0;
  return static_cast<double>(std::count(s.ids.begin(), s.ids.end(), id)) / static_cast<double>(s.size());
}

AttackOptions small(std::size_t n, std::uint64_t seed) {
  AttackOptions o;
  o.n = n;
  o.iterations = 60;
  o.batch = 8;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("search finds the all-zz gadget and its trace never regresses") {
  const Vocab v = toy_vocab();
  const TokenId zz = v.lookup("zz");
  const ScoreFn fn = [&](const TokenSeq& s) { return share_of(s, zz); };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Gadget g = gen_gadget(fn, v, small(4, seed));
    CHECK(g.tokens.ids == std::vector<TokenId>(4, zz));
    CHECK(g.objective == 1.0);
    CHECK(g.tokens.surface == "zz zz zz zz");
    for (std::size_t i = 1; i < g.trace.size(); ++i) CHECK(g.trace[i].objective >= g.trace[i - 1].objective);
  }
}

TEST_CASE("a constant score stops at the patience limit") {
  const Vocab v = toy_vocab();
  AttackOptions o = small(3, 1);
  o.iterations = 100;
  o.patience = 25;
  std::atomic<std::size_t> calls{0};
  const Gadget g = gen_gadget(
      [&](const TokenSeq&) {
        ++calls;
        return 0.5;
      },
      v, o);
  CHECK(g.early_abort);
  CHECK(g.trace.size() == 25);
  CHECK(g.tokens.ids == std::vector<TokenId>(3, v.lookup("!")));
  CHECK(g.evaluations == 1 + 25 * 8);
  CHECK(calls.load() == g.evaluations);
}

TEST_CASE("minimizing drives the gadget away from the scored token") {
  const Vocab v = toy_vocab();
  const TokenId bang = v.lookup("!");
  AttackOptions o = small(5, 3);
  o.objective = Objective::minimize;
  const Gadget g = gen_gadget([&](const TokenSeq& s) { return share_of(s, bang); }, v, o);
  CHECK(g.objective == 0.0);
  CHECK(std::count(g.tokens.ids.begin(), g.tokens.ids.end(), bang) == 0);
  CHECK(std::count(g.tokens.ids.begin(), g.tokens.ids.end(), kUnkId) == 0);
}

TEST_CASE("evaluation budget is bounded by T times B plus one") {
  const Vocab v = toy_vocab();
  AttackOptions o = small(6, 4);
  o.patience = 1000;
  std::atomic<std::size_t> calls{0};
  const Gadget g = gen_gadget(
      [&](const TokenSeq& s) {
        ++calls;
        return share_of(s, 2);
      },
      v, o);
  CHECK(calls.load() <= static_cast<std::size_t>(o.iterations * (o.batch + 1)));
  CHECK(g.evaluations == 1 + static_cast<std::size_t>(o.iterations * o.batch));
}

TEST_CASE("gadget length stays n and search is seed deterministic") {
  const Vocab v = toy_vocab();
  const ScoreFn fn = [&](const TokenSeq& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += std::sin(1.0 + s.ids[i] * (i + 1.0));
    return acc;
  };
  for (std::size_t n : {1U, 3U, 7U}) {
    const Gadget a = gen_gadget(fn, v, small(n, 11));
    const Gadget b = gen_gadget(fn, v, small(n, 11));
    CHECK(a.tokens.size() == n);
    CHECK(a.tokens.ids == b.tokens.ids);
    CHECK(a.objective == b.objective);
  }
}

TEST_CASE("serial and parallel candidate scoring give identical gadgets") {
  const Vocab v = toy_vocab();
  const ScoreFn fn = [&](const TokenSeq& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += std::cos(0.3 * s.ids[i] + i);
    return acc;
  };
  AttackOptions o = small(5, 21);
  o.exec.jobs = 1;
  const Gadget serial = gen_gadget(fn, v, o);
  o.exec.jobs = 4;
  const Gadget parallel = gen_gadget(fn, v, o);
  CHECK(serial.tokens.ids == parallel.tokens.ids);
  CHECK(serial.objective == parallel.objective);
  CHECK(serial.evaluations == parallel.evaluations);
}

TEST_CASE("query-specific search scores the confounded query") {
  const Vocab v = toy_vocab();
  AttackOptions o = small(2, 5);
  o.target_query = tokenize("a b c", v);
  o.placement.position = Position::suffix;
  const Gadget g = gen_gadget(
      [&](const TokenSeq& s) {
        // the last token is a gadget token under suffix placement
        return s.size() == 5 && s.ids.back() == v.lookup("c") ? 1.0 : 0.0;
      },
      v, o);
  CHECK(g.tokens.ids.back() == v.lookup("c"));
}

TEST_CASE("perplexity penalty with a constant score tracks rho") {
  const Vocab v = toy_vocab();
  AttackOptions o = small(4, 2);
  o.iterations = 100;
  o.patience = 100;
  // Perplexity stand-in: number of distinct tokens times ten.
  auto fake_ppl = [](const TokenSeq& s) {
    std::vector<TokenId> u = s.ids;
    std::sort(u.begin(), u.end());
    return 10.0 * static_cast<double>(std::unique(u.begin(), u.end()) - u.begin());
  };
  o.ppl = PplConstraint{0.1, 30.0, fake_ppl};
  const Gadget g = gen_gadget([](const TokenSeq&) { return 0.2; }, v, o);
  CHECK(fake_ppl(g.tokens) == 30.0);
  CHECK(g.objective == doctest::Approx(0.2));
  CHECK(g.score == 0.2);

  o.objective = Objective::minimize;
  const Gadget m = gen_gadget([](const TokenSeq&) { return 0.2; }, v, o);
  CHECK(fake_ppl(m.tokens) == 30.0);
  CHECK(m.objective == doctest::Approx(0.2));
}

TEST_CASE("option and vocabulary errors") {
  const ScoreFn fn = [](const TokenSeq&) { return 0.0; };
  AttackOptions o = small(0, 1);
  CHECK_THROWS_AS(gen_gadget(fn, toy_vocab(), o), ValidationError);
  o = small(2, 1);
  o.batch = 0;
  CHECK_THROWS_AS(gen_gadget(fn, toy_vocab(), o), ValidationError);
  o = small(2, 1);
  CHECK_THROWS_AS(gen_gadget(fn, Vocab::from_tokens(std::vector<std::string>{"!"}), o), ValidationError);
  CHECK_THROWS_AS(gen_gadget(fn, Vocab::from_tokens(std::vector<std::string>{"a", "b"}), o), ValidationError);
  o.ppl = PplConstraint{0.01, 0.0, [](const TokenSeq&) { return 1.0; }};
  CHECK_THROWS_AS(gen_gadget(fn, toy_vocab(), o), ValidationError);
  o = small(2, 1);
  o.sampling = Sampling::natural;
  o.token_weights = {0, 1};
  CHECK_THROWS_AS(gen_gadget(fn, toy_vocab(), o), ValidationError);
}

TEST_CASE("natural sampling only draws tokens with mass") {
  const Vocab v = toy_vocab();
  const auto w = load_token_weights("a\t5\nzz\t0\nnotthere\t9\n", v);
  REQUIRE(w.size() == v.size());
  CHECK(w[v.lookup("a")] == 5.0);
  CHECK(w[v.lookup("zz")] == 0.0);
  AttackOptions o = small(3, 8);
  o.sampling = Sampling::natural;
  o.token_weights = w;
  const TokenId zz = v.lookup("zz");
  const Gadget g = gen_gadget([&](const TokenSeq& s) { return share_of(s, v.lookup("a")) - share_of(s, zz); }, v, o);
  CHECK(g.tokens.ids == std::vector<TokenId>(3, v.lookup("a")));
  CHECK_THROWS_AS(load_token_weights("a 5\n", v), ValidationError);
}

TEST_CASE("confound places gadget and instruction") {
  const Vocab v = Vocab::build(std::vector<std::string>{"foo bar what is 2+2 ? please think hard ."});
  const TokenSeq q = tokenize("what is 2+2 ?", v);
  const TokenSeq g = tokenize("foo bar", v);
  Placement p;
  const TokenSeq pre = confound(q, g, p);
  CHECK(pre.surface == "foo bar what is 2+2 ?");
  CHECK(pre.size() == q.size() + g.size());
  CHECK(std::equal(g.ids.begin(), g.ids.end(), pre.ids.begin()));

  p.position = Position::suffix;
  CHECK(confound(q, g, p).surface == "what is 2+2 ? foo bar");

  p = make_placement(Position::prefix, "please think hard .", v);
  CHECK(confound(q, g, p).surface == "please think hard . foo bar what is 2+2 ?");
  p.position = Position::suffix;
  CHECK(confound(q, g, p).surface == "please think hard . what is 2+2 ? foo bar");
  CHECK(confound(q, TokenSeq{}, Placement{}).ids == q.ids);
}

TEST_CASE("baseline gadgets") {
  const Vocab v = toy_vocab();
  const Gadget r = baseline_gadget(BaselineKind::init_repeat, 4, v, 0);
  CHECK(r.tokens.surface == "! ! ! !");
  const Gadget a = baseline_gadget(BaselineKind::random, 6, v, 9);
  const Gadget b = baseline_gadget(BaselineKind::random, 6, v, 9);
  CHECK(a.tokens.ids == b.tokens.ids);
  CHECK(a.tokens.size() == 6);
  CHECK(std::count(a.tokens.ids.begin(), a.tokens.ids.end(), kUnkId) == 0);
  for (const auto& [id, text] : InstructionSet::defaults().texts) {
    CHECK(baseline_gadget(BaselineKind::instruction, 0, v, 0, id).tokens.size() == split_words(text).size());
  }
  CHECK_THROWS_AS(baseline_gadget(BaselineKind::instruction, 0, v, 0, "nope"), ValidationError);
}

TEST_CASE("gadget files round-trip") {
  const Vocab v = toy_vocab();
  const Gadget g = gen_gadget([&](const TokenSeq& s) { return share_of(s, v.lookup("b")); }, v, small(3, 1));
  const auto file = gadget_from_json(gadget_to_json(g, v, small(3, 1), "abc123", "optimized"));
  CHECK(file.scorer_fingerprint == "abc123");
  CHECK(file.origin == "optimized");
  CHECK(file.to_seq(v).ids == g.tokens.ids);
  CHECK(file.trace.size() == g.trace.size());
  CHECK(file.surface == g.tokens.surface);
}
