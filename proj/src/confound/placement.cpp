#include "reroute/confound.hpp"
#include "reroute/error.hpp"

namespace reroute {

namespace {

void append(TokenSeq& out, const TokenSeq& part) {
  if (part.empty() && part.surface.empty()) return;
  out.ids.insert(out.ids.end(), part.ids.begin(), part.ids.end());
  if (!part.surface.empty()) {
    if (!out.surface.empty()) out.surface += ' ';
    out.surface += part.surface;
  }
}

}  // namespace

std::string_view to_string(Objective o) { return o == Objective::maximize ? "maximize" : "minimize"; }
std::string_view to_string(Sampling s) { return s == Sampling::uniform ? "uniform" : "natural"; }
std::string_view to_string(Position p) { return p == Position::prefix ? "prefix" : "suffix"; }

Objective parse_objective(std::string_view s) {
  if (s == "maximize" || s == "max") return Objective::maximize;
  if (s == "minimize" || s == "min") return Objective::minimize;
  throw ValidationError("unknown objective \"" + std::string(s) + "\"");
}

Sampling parse_sampling(std::string_view s) {
  if (s == "uniform") return Sampling::uniform;
  if (s == "natural") return Sampling::natural;
  throw ValidationError("unknown sampling \"" + std::string(s) + "\"");
}

Position parse_position(std::string_view s) {
  if (s == "prefix") return Position::prefix;
  if (s == "suffix") return Position::suffix;
  throw ValidationError("unknown placement \"" + std::string(s) + "\"");
}

Placement make_placement(Position position, std::string_view instruction, const Vocab& vocab) {
  Placement p;
  p.position = position;
  if (!instruction.empty()) p.instruction = tokenize(instruction, vocab);
  return p;
}

TokenSeq confound(const TokenSeq& query, const TokenSeq& gadget, const Placement& placement) {
  TokenSeq out;
  out.ids.reserve(query.size() + gadget.size() +
                  (placement.instruction ? placement.instruction->size() : 0));
  if (placement.instruction) append(out, *placement.instruction);
  if (placement.position == Position::prefix) {
    append(out, gadget);
    append(out, query);
  } else {
    append(out, query);
    append(out, gadget);
  }
  return out;
}

}  // namespace reroute
