#include <algorithm>
#include <cmath>

#include "reroute/error.hpp"
#include "reroute/gateway.hpp"

namespace reroute {

std::string_view to_string(Decision d) { return d == Decision::strong ? "strong" : "weak"; }

void RouterConfig::validate() const {
  if (!scorer) throw ValidationError("router has no scorer");
  if (std::isnan(tau) || tau == std::numeric_limits<double>::infinity()) {
    throw ValidationError("threshold must be finite or the -inf sentinel");
  }
  if (strong_id == weak_id) throw ValidationError("strong and weak model ids must differ");
}

RouteResult route(const RouterConfig& config, const TokenSeq& query) {
  const double s = config.scorer->score(query);
  return {decide(s, config.tau), s};
}

double calibrate_scores(std::span<const double> scores, double epsilon) {
  if (scores.empty()) throw ValidationError("empty calibration set");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
  if (epsilon == 1.0) return kStrongForAll;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double budget = epsilon * static_cast<double>(sorted.size());
  const double max_score = sorted.back();
  // Walk distinct values from the top; count(>= v) grows as v decreases.
  std::optional<double> tau;
  std::size_t i = sorted.size();
  while (i > 0) {
    const double v = sorted[i - 1];
    std::size_t j = i;
    while (j > 0 && sorted[j - 1] == v) --j;
    const auto at_or_above = static_cast<double>(sorted.size() - j);
    if (at_or_above > budget) break;
    tau = v;
    i = j;
  }
  return tau ? *tau : max_score + kCalibrationDelta;
}

double calibrate(const Scorer& scorer, std::span<const TokenSeq> queries, double epsilon,
                 kernels::Exec exec) {
  if (queries.empty()) throw ValidationError("empty calibration set");
  const auto scores =
      kernels::evaluate([&](const TokenSeq& q) { return scorer.score(q); }, queries, exec);
  return calibrate_scores(scores, epsilon);
}

double strong_fraction(std::span<const double> scores, double tau) {
  if (scores.empty()) return 0.0;
  const auto strong = std::count_if(scores.begin(), scores.end(),
                                    [&](double s) { return decide(s, tau) == Decision::strong; });
  return static_cast<double>(strong) / static_cast<double>(scores.size());
}

bool policy_check(std::span<const Decision> decisions, double epsilon) {
  if (decisions.empty()) throw ValidationError("policy check needs at least one decision");
  const auto strong = std::count(decisions.begin(), decisions.end(), Decision::strong);
  return static_cast<double>(strong) / static_cast<double>(decisions.size()) <= epsilon;
}

nlohmann::json tau_to_json(double tau) {
  if (tau == kStrongForAll) return "-inf";
  return tau;
}

double tau_from_json(const nlohmann::json& j) {
  if (j.is_string() && j.get<std::string>() == "-inf") return kStrongForAll;
  if (!j.is_number()) throw ValidationError("threshold must be a number or \"-inf\"");
  return j.get<double>();
}

}  // namespace reroute
