#include <algorithm>
#include <vector>

#include "doctest.h"
#include "reroute/error.hpp"
#include "reroute/rng.hpp"
#include "reroute/shield.hpp"

using namespace reroute;

namespace {

std::vector<double> tens() {
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(10.0 * i);
  return v;
}

}  // namespace

TEST_CASE("filter threshold examples") {
  const auto v = tens();
  CHECK(fit_ppl_threshold(v, 0.1).threshold == 90.0);
  CHECK(fit_ppl_threshold(v, 0.5).threshold == 50.0);
  const PplFilter f = fit_ppl_threshold(v, 0.1);
  CHECK(f.flag(90.5));
  CHECK_FALSE(f.flag(90.0));
  CHECK_THROWS_AS(fit_ppl_threshold(std::vector<double>(9, 1.0), 0.1), ValidationError);
  CHECK_THROWS_AS(fit_ppl_threshold(v, 0.0), ValidationError);
  CHECK_THROWS_AS(fit_ppl_threshold(v, 1.0), ValidationError);
}

TEST_CASE("fit-set false positive rate never exceeds the target") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(10 + rng.below(90));
    for (double& x : v) x = 1.0 + static_cast<double>(rng.below(40));
    const double target = 0.01 + 0.98 * rng.uniform();
    const PplFilter f = fit_ppl_threshold(v, target);
    const auto flagged = std::count_if(v.begin(), v.end(), [&](double x) { return f.flag(x); });
    CHECK(static_cast<double>(flagged) / static_cast<double>(v.size()) <= target);
    // no smaller observed value qualifies
    for (double x : v) {
      if (x >= f.threshold) continue;
      const auto above = std::count_if(v.begin(), v.end(), [&](double y) { return y > x; });
      CHECK(static_cast<double>(above) / static_cast<double>(v.size()) > target);
    }
  }
}

TEST_CASE("filter JSON round trip") {
  const PplFilter f{42.5, 0.05};
  const PplFilter r = PplFilter::from_json(f.to_json());
  CHECK(r.threshold == 42.5);
  CHECK(r.fpr_target == 0.05);
  CHECK_THROWS_AS(PplFilter::from_json(nlohmann::json{{"schema", "scorers/v1"}, {"kind", "mf"}}), ValidationError);
}

TEST_CASE("ROC examples") {
  CHECK(roc(std::vector<double>{1, 2}, std::vector<double>{3, 4}).auc == doctest::Approx(1.0));
  CHECK(roc(std::vector<double>{1, 3}, std::vector<double>{2, 4}).auc == doctest::Approx(0.75));
  CHECK(roc(std::vector<double>{5, 5}, std::vector<double>{5, 5}).auc == doctest::Approx(0.5));
  CHECK(roc(std::vector<double>{3, 4}, std::vector<double>{1, 2}).auc == doctest::Approx(0.0));
  const RocCurve c = roc(std::vector<double>{1, 3}, std::vector<double>{2, 4});
  CHECK(c.points.front().fpr == 0.0);
  CHECK(c.points.front().tpr == 0.0);
  CHECK(c.points.back().fpr == 1.0);
  CHECK(c.points.back().tpr == 1.0);
  CHECK(roc_csv(c).rfind("fpr,tpr", 0) == 0);
}

TEST_CASE("trapezoid AUC equals the pairwise statistic") {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> clean(1 + rng.below(20)), attack(1 + rng.below(20));
    for (double& x : clean) x = static_cast<double>(rng.below(8));
    for (double& x : attack) x = static_cast<double>(rng.below(8)) + 1.0;
    double pairs = 0.0;
    for (double a : attack) {
      for (double c : clean) pairs += a > c ? 1.0 : (a == c ? 0.5 : 0.0);
    }
    const double want = pairs / static_cast<double>(clean.size() * attack.size());
    CHECK(roc(clean, attack).auc == doctest::Approx(want).epsilon(1e-12));
    CHECK(mann_whitney_auc(clean, attack) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("monitor flags a full window above epsilon plus margin") {
  UserMonitor m(10, 0.5, 0.2);
  bool flagged = false;
  for (int i = 0; i < 9; ++i) flagged = m.update("a", true);
  CHECK_FALSE(flagged);  // window not full yet
  CHECK(m.buffered("a") == 9);
  CHECK(m.update("a", false));  // 9 of 10

  UserMonitor n(10, 0.5, 0.2);
  for (int i = 0; i < 10; ++i) flagged = n.update("b", i < 6);
  CHECK_FALSE(flagged);  // 6 of 10
  CHECK(n.buffered("c") == 0);

  // 7 of 10 sits exactly on the line and is not flagged
  UserMonitor e(10, 0.5, 0.2);
  for (int i = 0; i < 10; ++i) flagged = e.update("d", i < 7);
  CHECK_FALSE(flagged);
  CHECK_FALSE(e.update("d", true));  // oldest strong slides out, still 7 of 10
}

TEST_CASE("monitor window slides") {
  UserMonitor m(4, 0.25, 0.0);
  for (bool s : {true, true, false, false}) m.update("u", s);
  CHECK(m.buffered("u") == 4);
  CHECK_FALSE(m.update("u", false));  // t f f f
  CHECK_FALSE(m.update("u", false));  // f f f f
  CHECK(m.update("u", true) == false);  // f f f t: 0.25 is not above 0.25
  CHECK(m.update("u", true));          // f f t t
  CHECK_THROWS_AS(UserMonitor(0, 0.5, 0.2), ValidationError);
  CHECK_THROWS_AS(UserMonitor(10, 1.5, 0.2), ValidationError);
}

TEST_CASE("monitor separates honest and attacking users in simulation") {
  Rng rng(14);
  const std::size_t window = 200;
  int honest_flags = 0, attacker_flags = 0;
  for (int user = 0; user < 100; ++user) {
    UserMonitor m(window, 0.5, 0.1);
    bool honest = false, attacker = false;
    const std::string id = std::to_string(user);
    for (std::size_t i = 0; i < window; ++i) {
      honest = m.update("h" + id, rng.bernoulli(0.5));
      attacker = m.update("a" + id, rng.bernoulli(0.95));
    }
    honest_flags += honest;
    attacker_flags += attacker;
  }
  CHECK(honest_flags <= 2);
  CHECK(attacker_flags == 100);
}

TEST_CASE("flag action names") {
  CHECK(parse_flag_action("reject") == FlagAction::reject);
  CHECK(parse_flag_action("force-weak") == FlagAction::force_weak);
  CHECK(to_string(FlagAction::force_weak) == "force-weak");
  CHECK_THROWS_AS(parse_flag_action("ban"), ValidationError);
}
