#include "reroute/confound.hpp"
#include "reroute/error.hpp"
#include "reroute/io.hpp"

namespace reroute {

using nlohmann::json;

namespace {
constexpr std::string_view kGadgetSchema = "gadget/v1";
}

json gadget_to_json(const Gadget& g, const Vocab& vocab, const AttackOptions& opts,
                    std::string_view scorer_fingerprint, std::string_view origin) {
  std::vector<std::string> tokens;
  for (TokenId id : g.tokens.ids) tokens.push_back(vocab.token(id));
  json trace = json::array();
  for (const auto& e : g.trace) trace.push_back({e.iteration, e.objective, e.updated});
  json options = {{"n", opts.n},
                  {"T", opts.iterations},
                  {"B", opts.batch},
                  {"patience", opts.patience},
                  {"objective", to_string(opts.objective)},
                  {"mode", opts.target_query ? "specific" : "independent"},
                  {"placement", to_string(opts.placement.position)},
                  {"sampling", to_string(opts.sampling)},
                  {"seed", opts.seed}};
  if (opts.target_query) options["target_query"] = detokenize(opts.target_query->ids, vocab);
  if (opts.placement.instruction) options["instruction"] = opts.placement.instruction->surface;
  if (opts.ppl) options["ppl_constraint"] = {{"alpha", opts.ppl->alpha}, {"rho", opts.ppl->rho}};
  return {{"schema", kGadgetSchema},
          {"origin", origin},
          {"tokens", tokens},
          {"surface", detokenize(g.tokens.ids, vocab)},
          {"objective", g.objective},
          {"score", g.score},
          {"evaluations", g.evaluations},
          {"early_abort", g.early_abort},
          {"scorer_fingerprint", scorer_fingerprint},
          {"options", std::move(options)},
          {"trace", std::move(trace)}};
}

GadgetFile gadget_from_json(const json& j) {
  io::expect_schema(j, kGadgetSchema);
  GadgetFile f;
  try {
    f.tokens = j.at("tokens").get<std::vector<std::string>>();
    f.surface = j.value("surface", "");
    f.scorer_fingerprint = j.value("scorer_fingerprint", "");
    f.origin = j.value("origin", "optimized");
    f.objective = j.value("objective", 0.0);
    f.options = j.value("options", json::object());
    for (const auto& row : j.value("trace", json::array())) {
      f.trace.push_back({row.at(0).get<int>(), row.at(1).get<double>(), row.at(2).get<bool>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed gadget file: ") + e.what());
  }
  return f;
}

TokenSeq GadgetFile::to_seq(const Vocab& vocab) const {
  TokenSeq seq;
  for (const auto& t : tokens) seq.ids.push_back(vocab.lookup(t));
  seq.surface = detokenize(seq.ids, vocab);
  return seq;
}

}  // namespace reroute
