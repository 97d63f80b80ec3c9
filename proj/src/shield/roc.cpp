#include <algorithm>

#include "reroute/error.hpp"
#include "reroute/io.hpp"
#include "reroute/shield.hpp"

namespace reroute {

RocCurve roc(std::span<const double> clean, std::span<const double> attack) {
  if (clean.empty() || attack.empty()) throw ValidationError("ROC needs both clean and attack scores");
  std::vector<double> c(clean.begin(), clean.end());
  std::vector<double> a(attack.begin(), attack.end());
  std::sort(c.begin(), c.end(), std::greater<>());
  std::sort(a.begin(), a.end(), std::greater<>());
  std::vector<double> thresholds;
  thresholds.reserve(c.size() + a.size());
  std::merge(c.begin(), c.end(), a.begin(), a.end(), std::back_inserter(thresholds), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t fp = 0;
  std::size_t tp = 0;
  const double nc = static_cast<double>(c.size());
  const double na = static_cast<double>(a.size());
  for (double t : thresholds) {
    while (fp < c.size() && c[fp] >= t) ++fp;
    while (tp < a.size() && a[tp] >= t) ++tp;
    curve.points.push_back({static_cast<double>(fp) / nc, static_cast<double>(tp) / na});
  }
  curve.auc = trapezoid_auc(curve.points);
  return curve;
}

double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

double mann_whitney_auc(std::span<const double> clean, std::span<const double> attack) {
  if (clean.empty() || attack.empty()) throw ValidationError("AUC needs both clean and attack scores");
  // Rank-based pair counting: for each attack value, count clean values below
  // it and ties with it.
  std::vector<double> c(clean.begin(), clean.end());
  std::sort(c.begin(), c.end());
  double wins = 0.0;
  for (double x : attack) {
    const auto lo = std::lower_bound(c.begin(), c.end(), x);
    const auto hi = std::upper_bound(lo, c.end(), x);
    wins += static_cast<double>(lo - c.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(c.size()) * static_cast<double>(attack.size()));
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : curve.points) out += io::fixed(p.fpr, 9) + "," + io::fixed(p.tpr, 9) + "\n";
  return out;
}

}  // namespace reroute
