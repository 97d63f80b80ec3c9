#include "reroute/error.hpp"
#include "reroute/shield.hpp"

namespace reroute {

std::string_view to_string(FlagAction a) { return a == FlagAction::reject ? "reject" : "force-weak"; }

FlagAction parse_flag_action(std::string_view s) {
  if (s == "force-weak" || s == "force_weak") return FlagAction::force_weak;
  if (s == "reject") return FlagAction::reject;
  throw ValidationError("unknown flag action \"" + std::string(s) + "\"");
}

UserMonitor::UserMonitor(std::size_t window, double epsilon, double margin)
    : window_(window), epsilon_(epsilon), margin_(margin) {
  if (window == 0) throw ValidationError("monitor window must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
  if (!(margin >= 0.0)) throw ValidationError("margin must be >= 0");
}

bool UserMonitor::update(std::string_view user, bool strong) {
  auto it = users_.find(user);
  if (it == users_.end()) it = users_.emplace(std::string(user), History{}).first;
  auto& h = it->second;
  h.recent.push_back(strong);
  h.strong += strong ? 1 : 0;
  if (h.recent.size() > window_) {
    h.strong -= h.recent.front() ? 1 : 0;
    h.recent.pop_front();
  }
  if (h.recent.size() < window_) return false;
  return static_cast<double>(h.strong) / static_cast<double>(window_) > epsilon_ + margin_;
}

std::size_t UserMonitor::buffered(std::string_view user) const {
  auto it = users_.find(user);
  return it == users_.end() ? 0 : it->second.recent.size();
}

}  // namespace reroute
