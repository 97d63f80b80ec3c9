#include <algorithm>
#include <cmath>

#include "reroute/bench.hpp"
#include "reroute/error.hpp"
#include "reroute/io.hpp"

namespace reroute {

RateResult rates_from_scores(std::span<const double> before, std::span<const double> after,
                             double tau) {
  if (before.size() != after.size()) throw ValidationError("score lists differ in length");
  if (before.empty()) throw ValidationError("evaluation set is empty");
  RateResult r;
  r.total = before.size();
  std::size_t strong_after = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool was_strong = decide(before[i], tau) == Decision::strong;
    const bool is_strong = decide(after[i], tau) == Decision::strong;
    strong_after += is_strong ? 1 : 0;
    if (was_strong) {
      ++r.originally_strong;
      r.downgraded += is_strong ? 0 : 1;
    } else {
      ++r.originally_weak;
      r.upgraded += is_strong ? 1 : 0;
    }
  }
  const auto pct = [](std::size_t num, std::size_t den) {
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
  };
  if (r.originally_weak > 0) r.upgrade = pct(r.upgraded, r.originally_weak);
  if (r.originally_strong > 0) r.downgrade = pct(r.downgraded, r.originally_strong);
  r.strong_before = pct(r.originally_strong, r.total);
  r.strong_after = pct(strong_after, r.total);
  return r;
}

RateResult upgrade_rate(const RouterConfig& config, std::span<const TokenSeq> queries,
                        const TokenSeq& gadget, const Placement& placement, kernels::Exec exec) {
  config.validate();
  if (queries.empty()) throw ValidationError("evaluation set is empty");
  std::vector<TokenSeq> confounded;
  confounded.reserve(queries.size());
  for (const auto& q : queries) confounded.push_back(confound(q, gadget, placement));
  const auto score = [&](const TokenSeq& q) { return config.scorer->score(q); };
  const auto before = kernels::evaluate(score, queries, exec);
  const auto after = kernels::evaluate(score, confounded, exec);
  return rates_from_scores(before, after, config.tau);
}

MeanSe mean_se(std::span<const double> values) {
  MeanSe m;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    m.se = sd / std::sqrt(static_cast<double>(values.size()));
  }
  return m;
}

MeanSe mean_se(std::span<const std::optional<double>> values) {
  std::vector<double> present;
  for (const auto& v : values) {
    if (v) present.push_back(*v);
  }
  return mean_se(present);
}

MeanSe mean_excluding_above(std::span<const double> values, double cutoff) {
  std::vector<double> kept;
  std::copy_if(values.begin(), values.end(), std::back_inserter(kept),
               [&](double v) { return v <= cutoff; });
  return mean_se(kept);
}

std::string histogram_csv(std::span<const double> clean, std::span<const double> attack,
                          std::size_t bins) {
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto span : {clean, attack}) {
    for (double v : span) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::string out = "bin_lo,bin_hi,clean,attack\n";
  if (!std::isfinite(lo)) return out;
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> c(bins, 0), a(bins, 0);
  auto bin_of = [&](double v) {
    if (!std::isfinite(v)) return bins - 1;
    return std::min(bins - 1, static_cast<std::size_t>((v - lo) / width));
  };
  for (double v : clean) ++c[bin_of(v)];
  for (double v : attack) ++a[bin_of(v)];
  for (std::size_t b = 0; b < bins; ++b) {
    out += io::fixed(lo + width * static_cast<double>(b)) + "," +
           io::fixed(lo + width * static_cast<double>(b + 1)) + "," + std::to_string(c[b]) + "," +
           std::to_string(a[b]) + "\n";
  }
  return out;
}

}  // namespace reroute
