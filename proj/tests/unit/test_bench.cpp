#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "doctest.h"
#include "reroute/bench.hpp"
#include "reroute/error.hpp"

using namespace reroute;

namespace {

struct Desk {
  Workload workload;
  Vocab vocab;
  std::map<std::string, std::shared_ptr<const Scorer>> scorers;
  std::map<std::string, double> tau;

  static const Desk& get() {
    static const Desk d = [] {
      Desk k;
      k.workload = gen_workload(700, 31, {}, {400, 150});
      k.vocab = Vocab::build(k.workload.all_texts());
      const HashEmbedder e(64, 0);
      std::vector<PreferenceExample> ex;
      for (const auto* q : k.workload.split(Split::train)) ex.push_back({tokenize(q->text, k.vocab), *q->label});
      FitOptions o;
      o.epochs = 120;
      std::vector<TokenSeq> cal;
      for (const auto* q : k.workload.split(Split::calibration)) cal.push_back(tokenize(q->text, k.vocab));
      for (auto kind : {ScorerKind::cls, ScorerKind::llm_proxy}) {
        const std::string name(to_string(kind));
        auto s = std::make_shared<const Scorer>(k.vocab, e, fit_scorer(kind, ex, k.vocab, e, o));
        k.tau[name] = calibrate(*s, cal, 0.5);
        k.scorers[name] = std::move(s);
      }
      return k;
    }();
    return d;
  }

  [[nodiscard]] GadgetSet optimized(const std::string& name, std::size_t count) const {
    const auto& s = *scorers.at(name);
    GadgetSet set{"opt-" + name, name, {}};
    for (std::size_t i = 0; i < count; ++i) {
      AttackOptions o;
      o.n = 6;
      o.iterations = 40;
      o.batch = 16;
      o.seed = 100 + i;
      const Gadget g = gen_gadget([&](const TokenSeq& q) { return s.score(q); }, vocab, o);
      set.gadgets.push_back({name + std::to_string(i), std::vector<std::string>(split_words(g.tokens.surface)),
                             s.fingerprint()});
    }
    return set;
  }
};

}  // namespace

TEST_CASE("workload generation is deterministic and well formed") {
  const Workload a = gen_workload(300, 9, {}, {100, 50});
  const Workload b = gen_workload(300, 9, {}, {100, 50});
  CHECK(a.to_jsonl() == b.to_jsonl());
  CHECK(a.split(Split::train).size() == 100);
  CHECK(a.split(Split::calibration).size() == 50);
  CHECK(a.split(Split::eval).size() == 150);
  a.validate();
  const Workload r = Workload::from_jsonl("r", a.to_jsonl());
  CHECK(r.to_jsonl() == a.to_jsonl());
  CHECK(gen_workload(300, 10).to_jsonl() != a.to_jsonl());
}

TEST_CASE("workload labels split into thirds and track length") {
  const Workload w = gen_workload(900, 3);
  std::map<double, int> counts;
  std::map<double, double> length;
  for (const auto& q : w.queries) {
    REQUIRE(q.label.has_value());
    ++counts[*q.label];
    length[*q.label] += static_cast<double>(split_words(q.text).size());
  }
  for (double l : {0.0, 0.5, 1.0}) CHECK(std::abs(counts[l] - 300) <= 10);
  CHECK(length[1.0] / counts[1.0] > length[0.0] / counts[0.0]);
}

TEST_CASE("a trained scorer orders held-out workload queries") {
  const Workload w = gen_workload(4000, 41, {}, {3000, 0});
  const Vocab v = Vocab::build(w.all_texts());
  const HashEmbedder e(256, 0);
  std::vector<PreferenceExample> ex;
  for (const auto* q : w.split(Split::train)) ex.push_back({tokenize(q->text, v), *q->label});
  const Scorer s(v, e, fit_scorer(ScorerKind::mf, ex, v, e));
  std::vector<double> scores, labels;
  for (const auto* q : w.split(Split::eval)) {
    scores.push_back(s.score_text(q->text));
    labels.push_back(*q->label);
  }
  CHECK(ordering_accuracy(scores, labels) >= 0.8);
}

TEST_CASE("ordering accuracy counts strong-weak pairs") {
  CHECK(ordering_accuracy(std::vector<double>{0.9, 0.1, 0.5}, std::vector<double>{1, 0, 0.5}) == 1.0);
  CHECK(ordering_accuracy(std::vector<double>{0.1, 0.9}, std::vector<double>{1, 0}) == 0.0);
}

TEST_CASE("rate examples") {
  const std::vector<double> before = {0.1, 0.2, 0.8, 0.9};
  const std::vector<double> after = {0.6, 0.7, 0.9, 0.95};
  RateResult r = rates_from_scores(before, after, 0.5);
  CHECK(r.upgrade == 100.0);
  CHECK(r.downgrade == 0.0);
  CHECK(r.strong_before == 50.0);
  CHECK(r.strong_after == 100.0);

  r = rates_from_scores(before, std::vector<double>{0.6, 0.1, 0.3, 0.9}, 0.5);
  CHECK(r.upgrade == 50.0);
  CHECK(r.downgrade == 50.0);

  r = rates_from_scores(std::vector<double>{0.9}, std::vector<double>{0.9}, 0.5);
  CHECK_FALSE(r.upgrade.has_value());
  CHECK(r.downgrade == 0.0);
  r = rates_from_scores(std::vector<double>{0.1}, std::vector<double>{0.1}, 0.5);
  CHECK_FALSE(r.downgrade.has_value());
  CHECK_THROWS_AS(rates_from_scores(before, std::vector<double>{1.0}, 0.5), ValidationError);
}

TEST_CASE("an empty gadget leaves every decision unchanged") {
  const Desk& d = Desk::get();
  std::vector<TokenSeq> qs;
  for (const auto* q : d.workload.split(Split::eval)) qs.push_back(tokenize(q->text, d.vocab));
  const RouterConfig c{d.scorers.at("cls"), d.tau.at("cls")};
  const RateResult r = upgrade_rate(c, qs, TokenSeq{}, Placement{});
  CHECK(r.upgraded == 0);
  CHECK(r.downgraded == 0);
  CHECK(r.strong_before == r.strong_after);
}

TEST_CASE("mean and standard error") {
  const std::vector<double> v = {90.0, 100.0};
  const MeanSe m = mean_se(v);
  CHECK(m.mean == 95.0);
  CHECK(m.se == doctest::Approx(5.0));
  const std::vector<std::optional<double>> o = {90.0, std::nullopt, 100.0};
  CHECK(mean_se(o).count == 2);
  CHECK(mean_se(o).mean == 95.0);
  CHECK(mean_se(std::vector<double>{}).count == 0);
  CHECK(mean_excluding_above(std::vector<double>{1, 2, 100}, 10).mean == 1.5);
}

TEST_CASE("experiment matrix marks the white-box diagonal and keeps counts consistent") {
  const Desk& d = Desk::get();
  ExperimentInputs in;
  in.scorers = d.scorers;
  in.tau = d.tau;
  for (const auto* q : d.workload.split(Split::eval)) in.eval_texts.push_back(q->text);
  in.sets = {d.optimized("cls", 2), d.optimized("llm_proxy", 2)};
  const EvalReport rep = run_experiment(in);
  CHECK(rep.cells.size() == 4);
  for (const auto& cell : rep.cells) {
    CHECK(cell.white_box == (cell.surrogate == cell.target));
    CHECK(cell.gadgets.size() == 2);
    for (const auto& g : cell.gadgets) {
      const auto& r = g.rates;
      CHECK(r.originally_weak + r.originally_strong == r.total);
      const double after =
          static_cast<double>(r.originally_strong - r.downgraded + r.upgraded) / static_cast<double>(r.total);
      CHECK(r.strong_after == doctest::Approx(100.0 * after));
    }
  }
  const CellReport* wb = rep.cell("opt-cls", "cls");
  REQUIRE(wb != nullptr);
  CHECK(wb->upgrade.mean >= 50.0);
  CHECK(rep.to_json()["cells"].size() == 4);
  CHECK(rep.summary_csv().find("opt-cls") != std::string::npos);
}

TEST_CASE("a set whose gadgets came from another scorer is rejected") {
  const Desk& d = Desk::get();
  ExperimentInputs in;
  in.scorers = d.scorers;
  in.tau = d.tau;
  in.eval_texts = {"what is a set ?"};
  GadgetSet set = d.optimized("cls", 1);
  set.surrogate = "llm_proxy";
  in.sets = {set};
  CHECK_THROWS_AS(run_experiment(in), ValidationError);
  in.sets = {GadgetSet{"empty", std::nullopt, {}}};
  CHECK_THROWS_AS(run_experiment(in), ValidationError);
}

TEST_CASE("histogram rows cover both samples") {
  const std::vector<double> a = {1, 2, 3}, b = {2, 5};
  const std::string csv = histogram_csv(a, b, 4);
  CHECK(csv.rfind("bin_lo,bin_hi,clean,attack", 0) == 0);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 5);
}
