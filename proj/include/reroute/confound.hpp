#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reroute/kernels.hpp"
#include "reroute/textcore.hpp"

namespace reroute {

// Black-box score oracle. Must be pure and safe to call from several threads
// at once: the candidates of one iteration are evaluated concurrently.
using ScoreFn = std::function<double(const TokenSeq&)>;

enum class Objective { maximize, minimize };
enum class Sampling { uniform, natural };
enum class Position { prefix, suffix };

std::string_view to_string(Objective o);
std::string_view to_string(Sampling s);
std::string_view to_string(Position p);
Objective parse_objective(std::string_view s);
Sampling parse_sampling(std::string_view s);
Position parse_position(std::string_view s);

// Where the gadget goes relative to the query. The instruction, when set,
// always leads: instr | gadget | query (prefix) or instr | query | gadget
// (suffix).
struct Placement {
  Position position = Position::prefix;
  std::optional<TokenSeq> instruction;
};

Placement make_placement(Position position, std::string_view instruction, const Vocab& vocab);

// Pure concatenation; surfaces are joined with single spaces.
TokenSeq confound(const TokenSeq& query, const TokenSeq& gadget, const Placement& placement);

struct PplConstraint {
  double alpha = 0.01;
  double rho = 0.0;
  std::function<double(const TokenSeq&)> perplexity;
};

struct AttackOptions {
  std::size_t n = 10;
  int iterations = 100;  // T
  int batch = 32;        // B
  int patience = 25;
  Objective objective = Objective::maximize;
  // Empty: query-independent search scored on the gadget alone. Set: the
  // gadget is scored placed into this query.
  std::optional<TokenSeq> target_query;
  Placement placement;
  Sampling sampling = Sampling::uniform;
  // Per-token sampling weights indexed by vocabulary id; natural sampling only.
  std::vector<double> token_weights;
  std::uint64_t seed = 0;
  std::optional<PplConstraint> ppl;
  kernels::Exec exec;
};

void validate(const AttackOptions& opts);

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;  // accepted value after this iteration
  bool updated = false;
};

struct Gadget {
  TokenSeq tokens;
  double objective = 0.0;
  double score = 0.0;  // raw score_fn term of the final gadget
  std::vector<TraceEntry> trace;
  std::size_t evaluations = 0;  // score_fn calls
  bool early_abort = false;
};

// Hill-climbing search for a confounder gadget.
//
// Starts from n copies of "!". Each iteration picks a position uniformly,
// draws B replacement tokens (with replacement, unk excluded) and keeps the
// best of {incumbent} + B candidates; ties stay with the incumbent. Stops
// after T iterations or after `patience` consecutive iterations that kept the
// incumbent.
Gadget gen_gadget(const ScoreFn& score_fn, const Vocab& vocab, const AttackOptions& opts);

// Unigram sampling weights from a two-column TSV (token <TAB> count).
// Tokens missing from the table get weight 0; unknown table tokens are skipped.
std::vector<double> load_token_weights(const std::string& tsv_text, const Vocab& vocab);

enum class BaselineKind { init_repeat, random, instruction };

struct InstructionSet {
  std::map<std::string, std::string> texts;

  static InstructionSet defaults();
  static InstructionSet from_json(const nlohmann::json& j);
};

Gadget baseline_gadget(BaselineKind kind, std::size_t n, const Vocab& vocab, std::uint64_t seed,
                       std::string_view instruction_id = {},
                       const InstructionSet& instructions = InstructionSet::defaults());

// Persisted gadget: tokens, surface, trace, options and the fingerprint of
// the scorer it was optimized against.
nlohmann::json gadget_to_json(const Gadget& g, const Vocab& vocab, const AttackOptions& opts,
                              std::string_view scorer_fingerprint, std::string_view origin);

struct GadgetFile {
  std::vector<std::string> tokens;
  std::string surface;
  std::string scorer_fingerprint;
  std::string origin;  // "optimized", "init_repeat", "random", "instruction:<id>"
  double objective = 0.0;
  nlohmann::json options;
  std::vector<TraceEntry> trace;

  [[nodiscard]] TokenSeq to_seq(const Vocab& vocab) const;
};

GadgetFile gadget_from_json(const nlohmann::json& j);

}  // namespace reroute
