#include <algorithm>

#include "reroute/error.hpp"
#include "reroute/io.hpp"
#include "reroute/scorers.hpp"
#include "reroute/shield.hpp"

namespace reroute {

PplFilter fit_ppl_threshold(std::span<const double> clean, double fpr_target) {
  if (clean.empty()) throw ValidationError("empty clean query set");
  if (clean.size() < 10) throw ValidationError("need at least 10 clean queries");
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) throw ValidationError("fpr_target must lie in (0, 1)");
  std::vector<double> sorted(clean.begin(), clean.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto above = std::upper_bound(sorted.begin(), sorted.end(), sorted[i]);
    const auto count = static_cast<double>(sorted.end() - above);
    if (count / n <= fpr_target) return {sorted[i], fpr_target};
  }
  return {sorted.back(), fpr_target};
}

PplFilter fit_ppl_threshold(std::span<const TokenSeq> clean, const NgramLM& lm, double fpr_target) {
  std::vector<double> ppl;
  ppl.reserve(clean.size());
  for (const auto& q : clean) ppl.push_back(lm.perplexity(q));
  return fit_ppl_threshold(ppl, fpr_target);
}

nlohmann::json PplFilter::to_json() const {
  return {{"schema", kScorersSchema},
          {"kind", "ppl_filter"},
          {"threshold", threshold},
          {"fpr_target", fpr_target}};
}

PplFilter PplFilter::from_json(const nlohmann::json& j) {
  io::expect_schema(j, kScorersSchema);
  if (j.value("kind", "") != "ppl_filter") throw ValidationError("not a perplexity filter file");
  PplFilter f{j.at("threshold").get<double>(), j.value("fpr_target", 0.0)};
  if (!(f.threshold > 0.0)) throw ValidationError("filter threshold must be positive");
  return f;
}

}  // namespace reroute
