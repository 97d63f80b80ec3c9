#include <algorithm>

#include "reroute/bench.hpp"
#include "reroute/error.hpp"
#include "reroute/io.hpp"

namespace reroute {

namespace {

using nlohmann::json;

json mean_se_json(const MeanSe& m) {
  if (m.count == 0) return nullptr;
  return {{"mean", m.mean}, {"se", m.se}, {"n", m.count}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_opt(const std::optional<double>& v) { return v ? io::fixed(*v, 4) : ""; }
std::string csv_mean(const MeanSe& m) { return m.count ? io::fixed(m.mean, 4) : ""; }
std::string csv_se(const MeanSe& m) { return m.count ? io::fixed(m.se, 4) : ""; }

PricingTable effective_pricing(const ExperimentInputs& in) {
  if (!in.pricing.models.empty()) return in.pricing;
  PricingTable p;
  p.models[in.strong_id] = {2500000, 10000000};
  p.models[in.weak_id] = {150000, 600000};
  return p;
}

BackendMap effective_backends(const ExperimentInputs& in) {
  BackendMap b = in.backends;
  if (!b.contains(in.strong_id)) b.emplace(in.strong_id, ModelBackend::stub("{input}"));
  if (!b.contains(in.weak_id)) b.emplace(in.weak_id, ModelBackend::stub("{input}"));
  return b;
}

Money workload_cost(std::span<const TokenSeq> inputs, std::span<const double> scores, double tau,
                    const ExperimentInputs& in, const BackendMap& backends,
                    const PricingTable& pricing, const Vocab& vocab) {
  std::vector<Transcript> transcripts;
  transcripts.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Decision d = decide(scores[i], tau);
    const std::string& model = d == Decision::strong ? in.strong_id : in.weak_id;
    const std::string text = detokenize(inputs[i].ids, vocab);
    Transcript t;
    t.steps.push_back({d, model, text});
    t.tokens_in = split_words(text).size();
    t.tokens_out = split_words(invoke_backend(backends.find(model)->second, model, text)).size();
    transcripts.push_back(std::move(t));
  }
  return cost(transcripts, pricing);
}

}  // namespace

EvalReport run_experiment(const ExperimentInputs& in) {
  if (in.scorers.empty()) throw ValidationError("experiment has no scorers");
  if (in.sets.empty()) throw ValidationError("experiment has no gadget sets");
  if (in.eval_texts.empty()) throw ValidationError("experiment has no evaluation queries");
  std::vector<std::string> targets = in.targets;
  if (targets.empty()) {
    for (const auto& [name, s] : in.scorers) targets.push_back(name);
  }
  for (const auto& t : targets) {
    if (!in.scorers.contains(t)) throw ValidationError("unknown target scorer " + t);
    if (!in.tau.contains(t)) throw ValidationError("no threshold for target scorer " + t);
  }
  for (const auto& set : in.sets) {
    if (set.gadgets.empty()) throw ValidationError("gadget set " + set.label + " is empty");
    if (!set.surrogate) continue;
    auto it = in.scorers.find(*set.surrogate);
    if (it == in.scorers.end()) throw ValidationError("unknown surrogate scorer " + *set.surrogate);
    for (const auto& g : set.gadgets) {
      if (g.scorer_fingerprint != it->second->fingerprint()) {
        throw ValidationError("gadget " + g.id + " was optimized against scorer " +
                              (g.scorer_fingerprint.empty() ? "<none>" : g.scorer_fingerprint) +
                              ", not surrogate " + *set.surrogate + " (" +
                              it->second->fingerprint() + ")");
      }
    }
  }

  const auto pricing = effective_pricing(in);
  const auto backends = effective_backends(in);
  EvalReport report;
  report.name = in.name;
  for (const auto& [name, s] : in.scorers) report.fingerprints[name] = s->fingerprint();

  for (const auto& target : targets) {
    const Scorer& scorer = *in.scorers.at(target);
    const double tau = in.tau.at(target);
    report.tau[target] = tau;
    RouterConfig config{in.scorers.at(target), tau, in.strong_id, in.weak_id};
    config.validate();
    Placement placement = in.placement;
    placement.instruction.reset();
    if (!in.instruction_text.empty()) placement.instruction = tokenize(in.instruction_text, scorer.vocab());

    std::vector<TokenSeq> queries;
    queries.reserve(in.eval_texts.size());
    for (const auto& text : in.eval_texts) queries.push_back(tokenize(text, scorer.vocab()));
    const auto score = [&](const TokenSeq& q) { return scorer.score(q); };
    const auto before = kernels::evaluate(score, queries, in.exec);
    const Money cost_before = workload_cost(queries, before, tau, in, backends, pricing, scorer.vocab());

    for (const auto& set : in.sets) {
      CellReport cell;
      cell.set_label = set.label;
      cell.surrogate = set.surrogate.value_or("");
      cell.target = target;
      cell.white_box = set.surrogate && *set.surrogate == target;
      std::vector<std::optional<double>> ups, downs;
      std::vector<double> sb, sa, cb, ca;
      for (const auto& g : set.gadgets) {
        TokenSeq gadget;
        for (const auto& tok : g.tokens) gadget.ids.push_back(scorer.vocab().lookup(tok));
        std::vector<TokenSeq> confounded;
        confounded.reserve(queries.size());
        for (const auto& q : queries) confounded.push_back(confound(q, gadget, placement));
        const auto after = kernels::evaluate(score, confounded, in.exec);
        GadgetResult r;
        r.gadget_id = g.id;
        r.rates = rates_from_scores(before, after, tau);
        r.cost_before = cost_before;
        r.cost_after = workload_cost(confounded, after, tau, in, backends, pricing, scorer.vocab());
        ups.push_back(r.rates.upgrade);
        downs.push_back(r.rates.downgrade);
        sb.push_back(r.rates.strong_before);
        sa.push_back(r.rates.strong_after);
        cb.push_back(r.cost_before.value());
        ca.push_back(r.cost_after.value());
        cell.gadgets.push_back(std::move(r));
      }
      cell.upgrade = mean_se(ups);
      cell.downgrade = mean_se(downs);
      cell.strong_before = mean_se(sb);
      cell.strong_after = mean_se(sa);
      cell.cost_before = mean_se(cb);
      cell.cost_after = mean_se(ca);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

const CellReport* EvalReport::cell(std::string_view set_label, std::string_view target) const {
  for (const auto& c : cells) {
    if (c.set_label == set_label && c.target == target) return &c;
  }
  return nullptr;
}

json EvalReport::to_json() const {
  json cells_json = json::array();
  for (const auto& c : cells) {
    json gadgets = json::array();
    for (const auto& g : c.gadgets) {
      gadgets.push_back({{"gadget", g.gadget_id},
                         {"upgrade", optional_json(g.rates.upgrade)},
                         {"downgrade", optional_json(g.rates.downgrade)},
                         {"strong_before", g.rates.strong_before},
                         {"strong_after", g.rates.strong_after},
                         {"originally_weak", g.rates.originally_weak},
                         {"originally_strong", g.rates.originally_strong},
                         {"upgraded", g.rates.upgraded},
                         {"downgraded", g.rates.downgraded},
                         {"cost_before", g.cost_before.to_string()},
                         {"cost_after", g.cost_after.to_string()}});
    }
    cells_json.push_back({{"set", c.set_label},
                          {"surrogate", c.surrogate.empty() ? json(nullptr) : json(c.surrogate)},
                          {"target", c.target},
                          {"white_box", c.white_box},
                          {"upgrade", mean_se_json(c.upgrade)},
                          {"downgrade", mean_se_json(c.downgrade)},
                          {"strong_before", mean_se_json(c.strong_before)},
                          {"strong_after", mean_se_json(c.strong_after)},
                          {"cost_before", mean_se_json(c.cost_before)},
                          {"cost_after", mean_se_json(c.cost_after)},
                          {"gadgets", std::move(gadgets)}});
  }
  json taus = json::object();
  for (const auto& [k, v] : tau) taus[k] = tau_to_json(v);
  return {{"name", name},
          {"standard_error", "sample stddev / sqrt(number of gadgets)"},
          {"fingerprints", fingerprints},
          {"tau", std::move(taus)},
          {"cells", std::move(cells_json)}};
}

std::string EvalReport::gadgets_csv() const {
  std::string out =
      "set,surrogate,target,white_box,gadget,upgrade,downgrade,strong_before,strong_after,"
      "cost_before,cost_after\n";
  for (const auto& c : cells) {
    for (const auto& g : c.gadgets) {
      out += c.set_label + "," + c.surrogate + "," + c.target + "," + (c.white_box ? "1" : "0") +
             "," + g.gadget_id + "," + csv_opt(g.rates.upgrade) + "," + csv_opt(g.rates.downgrade) +
             "," + io::fixed(g.rates.strong_before, 4) + "," + io::fixed(g.rates.strong_after, 4) +
             "," + g.cost_before.to_string() + "," + g.cost_after.to_string() + "\n";
    }
  }
  return out;
}

std::string EvalReport::summary_csv() const {
  std::string out =
      "set,surrogate,target,white_box,gadgets,upgrade_mean,upgrade_se,downgrade_mean,"
      "downgrade_se,strong_before,strong_after_mean,strong_after_se,cost_before,cost_after_mean\n";
  for (const auto& c : cells) {
    out += c.set_label + "," + c.surrogate + "," + c.target + "," + (c.white_box ? "1" : "0") + "," +
           std::to_string(c.gadgets.size()) + "," + csv_mean(c.upgrade) + "," + csv_se(c.upgrade) +
           "," + csv_mean(c.downgrade) + "," + csv_se(c.downgrade) + "," +
           csv_mean(c.strong_before) + "," + csv_mean(c.strong_after) + "," + csv_se(c.strong_after) +
           "," + (c.cost_before.count ? io::fixed(c.cost_before.mean, 6) : "") + "," +
           (c.cost_after.count ? io::fixed(c.cost_after.mean, 6) : "") + "\n";
  }
  return out;
}

}  // namespace reroute
