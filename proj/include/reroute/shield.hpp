#pragma once

#include <deque>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reroute/textcore.hpp"

namespace reroute {

// Flags a query when its perplexity is strictly above the threshold.
struct PplFilter {
  double threshold = 0.0;
  double fpr_target = 0.0;

  [[nodiscard]] bool flag(double perplexity) const noexcept { return perplexity > threshold; }

  // Stored in the scorers/v1 envelope with kind "ppl_filter".
  [[nodiscard]] nlohmann::json to_json() const;
  static PplFilter from_json(const nlohmann::json& j);
};

// Threshold = smallest clean perplexity v such that the fraction of clean
// values strictly above v is <= fpr_target. Needs >= 10 clean values.
PplFilter fit_ppl_threshold(std::span<const double> clean_perplexities, double fpr_target);
PplFilter fit_ppl_threshold(std::span<const TokenSeq> clean, const NgramLM& lm, double fpr_target);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
  double auc = 0.0;              // trapezoid rule over points
};

// Attack scores are the positive class; higher = more suspicious. Sweeps
// every distinct observed value as a ">=" threshold.
RocCurve roc(std::span<const double> clean, std::span<const double> attack);

double trapezoid_auc(std::span<const RocPoint> points);

// P(attack > clean) + 0.5 P(attack == clean), counted over all pairs.
double mann_whitney_auc(std::span<const double> clean, std::span<const double> attack);

std::string roc_csv(const RocCurve& curve);

enum class FlagAction { force_weak, reject };

std::string_view to_string(FlagAction a);
FlagAction parse_flag_action(std::string_view s);

// Per-user sliding window over the last W routing decisions (true = strong).
// A user is flagged once the window is full and its strong fraction exceeds
// epsilon + margin. Not synchronized: callers serialize updates per user.
class UserMonitor {
 public:
  UserMonitor(std::size_t window = 10, double epsilon = 0.5, double margin = 0.2);

  // Appends the decision; returns true when the user is flagged afterwards.
  bool update(std::string_view user, bool strong);

  [[nodiscard]] std::size_t buffered(std::string_view user) const;
  [[nodiscard]] std::size_t window() const noexcept { return window_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] double margin() const noexcept { return margin_; }

 private:
  struct History {
    std::deque<bool> recent;
    std::size_t strong = 0;
  };

  std::size_t window_;
  double epsilon_;
  double margin_;
  std::map<std::string, History, std::less<>> users_;
};

}  // namespace reroute
