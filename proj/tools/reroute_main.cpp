// reroute: command-line front end for routers, gadgets and defenses.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reroute/bench.hpp"
#include "reroute/confound.hpp"
#include "reroute/error.hpp"
#include "reroute/gateway.hpp"
#include "reroute/io.hpp"
#include "reroute/scorers.hpp"
#include "reroute/serve.hpp"
#include "reroute/shield.hpp"
#include "reroute/textcore.hpp"

using namespace reroute;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kCalibrationSchema = "calibration/v1";
constexpr std::string_view kDefenseSchema = "defense/v1";

struct Globals {
  std::uint64_t seed = 0;
  int jobs = 0;
};

kernels::Exec exec_of(const Globals& g) { return {g.jobs}; }

struct Query {
  std::string id;
  std::string text;
  std::optional<double> label;
};

// .jsonl rows need "text" (optional "id", "label"); anything else is one query per line.
std::vector<Query> read_queries(const fs::path& path) {
  std::vector<Query> out;
  if (path.extension() == ".jsonl") {
    const auto rows = io::read_jsonl(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (!r.is_object() || !r.contains("text") || !r["text"].is_string()) {
        throw ValidationError(path.string() + ":" + std::to_string(i + 1) + ": row lacks a string \"text\"");
      }
      Query q{r.value("id", std::to_string(i)), r["text"].get<std::string>(), std::nullopt};
      if (r.contains("label") && !r["label"].is_null()) q.label = r["label"].get<double>();
      out.push_back(std::move(q));
    }
  } else {
    const auto texts = read_corpus(path);
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({std::to_string(i), texts[i], std::nullopt});
  }
  if (out.empty()) throw ValidationError(path.string() + " contains no queries");
  return out;
}

std::vector<std::string> texts_of(const std::vector<Query>& qs) {
  std::vector<std::string> out;
  for (const auto& q : qs) out.push_back(q.text);
  return out;
}

std::vector<TokenSeq> tokenize_all(const std::vector<std::string>& texts, const Vocab& vocab) {
  std::vector<TokenSeq> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tokenize(t, vocab));
  return out;
}

Scorer load_scorer(const fs::path& path) { return Scorer::from_json(io::read_json(path)); }

// A calibration file, or a bare number / "-inf".
double load_tau(const std::string& value) {
  if (fs::exists(value)) {
    const auto j = io::read_json(value);
    if (j.is_object()) {
      io::expect_schema(j, kCalibrationSchema);
      return tau_from_json(j.at("tau"));
    }
    return tau_from_json(j);
  }
  if (value == "-inf") return kStrongForAll;
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("threshold \"" + value + "\" is neither a calibration file nor a number");
}

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).string();
}

ModelBackend parse_backend(const std::string& value) {
  if (value.rfind("http://", 0) == 0) return ModelBackend::http({value, "", std::chrono::milliseconds(30000)});
  return ModelBackend::stub(value);
}

void print(const std::string& line) { std::cout << line << "\n"; }

// ---------------------------------------------------------------------------

void cmd_build_vocab(const std::vector<std::string>& corpora, const std::string& out) {
  std::vector<std::string> texts;
  for (const auto& c : corpora) {
    auto t = read_corpus(c);
    texts.insert(texts.end(), t.begin(), t.end());
  }
  const Vocab v = Vocab::build(texts);
  io::write_json(out, vocab_to_json(v));
  print("vocabulary: " + std::to_string(v.size()) + " tokens -> " + out);
}

void cmd_train_lm(const std::string& vocab_path, const std::vector<std::string>& corpora,
                  NgramLM::Options opts, const std::string& out) {
  const Vocab vocab = vocab_from_json(io::read_json(vocab_path));
  std::vector<TokenSeq> seqs;
  for (const auto& c : corpora) {
    for (const auto& t : read_corpus(c)) seqs.push_back(tokenize(t, vocab));
  }
  const NgramLM lm = NgramLM::train(seqs, vocab.size(), opts);
  io::write_json(out, lm_file_to_json(vocab, lm));
  print("language model: " + std::to_string(lm.total_tokens()) + " tokens, order " +
        std::to_string(opts.order) + " -> " + out);
}

void cmd_gen_workload(const Globals& g, std::size_t size, SplitSizes splits, DifficultyModel model,
                      const std::string& name, const std::string& out) {
  const Workload w = gen_workload(size, g.seed, model, splits, name);
  const auto rows = w.to_jsonl();
  std::map<std::string, std::vector<json>> by_split;
  for (const auto& r : rows) by_split[r["split"].get<std::string>()].push_back(r);
  io::write_jsonl(fs::path(out) / "all.jsonl", rows);
  for (const char* s : {"train", "calibration", "eval"}) {
    io::write_jsonl(fs::path(out) / (std::string(s) + ".jsonl"), by_split[s]);
  }
  print("workload " + name + ": " + std::to_string(splits.train) + " train, " +
        std::to_string(splits.calibration) + " calibration, " +
        std::to_string(size - splits.train - splits.calibration) + " eval -> " + out);
}

struct TrainArgs {
  std::string kind = "mf";
  std::string vocab;
  std::string data;
  std::string out;
  std::size_t dim = 256;
  std::uint64_t embed_seed = 0;
  FitOptions fit;
  std::string url;
  std::string bearer_env;
  int timeout_ms = 10000;
};

void cmd_train_scorer(const Globals& g, TrainArgs a) {
  const ScorerKind kind = parse_scorer_kind(a.kind);
  const HashEmbedder embedder(a.dim, a.embed_seed);
  if (kind == ScorerKind::external) {
    if (a.url.empty()) throw ValidationError("external scorers need --url");
    Vocab vocab = a.vocab.empty() ? Vocab() : vocab_from_json(io::read_json(a.vocab));
    ScorerParams p{kind, ExternalEndpoint{a.url, a.bearer_env, std::chrono::milliseconds(a.timeout_ms)}, {}};
    const Scorer s(std::move(vocab), embedder, std::move(p));
    io::write_json(a.out, s.to_json());
    print("external scorer " + a.url + " fingerprint " + s.fingerprint() + " -> " + a.out);
    return;
  }
  if (a.vocab.empty() || a.data.empty()) throw ValidationError("training needs --vocab and --data");
  const Vocab vocab = vocab_from_json(io::read_json(a.vocab));
  std::vector<PreferenceExample> examples;
  for (const auto& q : read_queries(a.data)) {
    if (!q.label) throw ValidationError("training row " + q.id + " has no label");
    examples.push_back({tokenize(q.text, vocab), *q.label});
  }
  a.fit.seed = g.seed;
  ScorerParams params = fit_scorer(kind, examples, vocab, embedder, a.fit);
  const std::string final_loss =
      params.loss_history.empty() ? "n/a" : io::fixed(params.loss_history.back(), 6);
  const Scorer s(vocab, embedder, std::move(params));
  io::write_json(a.out, s.to_json());
  print(a.kind + " scorer on " + std::to_string(examples.size()) + " examples, final loss " +
        final_loss + ", fingerprint " + s.fingerprint() + " -> " + a.out);
}

void cmd_calibrate(const Globals& g, const std::string& scorer_path, const std::string& queries,
                   double epsilon, const std::string& out) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must be in [0, 1]");
  const Scorer s = load_scorer(scorer_path);
  const auto seqs = tokenize_all(texts_of(read_queries(queries)), s.vocab());
  const auto scores = kernels::evaluate([&](const TokenSeq& q) { return s.score(q); }, seqs, exec_of(g));
  const double tau = calibrate_scores(scores, epsilon);
  const double frac = strong_fraction(scores, tau);
  json j = {{"schema", kCalibrationSchema},
            {"epsilon", epsilon},
            {"tau", tau_to_json(tau)},
            {"achieved_fraction", frac},
            {"queries", seqs.size()},
            {"scorer_fingerprint", s.fingerprint()}};
  if (!out.empty()) io::write_json(out, j);
  print("tau " + (std::isinf(tau) ? std::string("-inf") : io::fixed(tau, 9)) +
        " strong fraction " + io::fixed(frac, 4) + " over " + std::to_string(seqs.size()) + " queries");
}

struct GadgetArgs {
  std::string scorer;
  std::size_t n = 10;
  int iterations = 100;
  int batch = 32;
  int patience = 25;
  std::string mode = "independent";
  std::string query;
  std::string objective = "maximize";
  std::string sampling = "uniform";
  std::string freq;
  std::string placement = "prefix";
  std::string instruction;
  std::string lm;
  double alpha = 0.01;
  std::optional<double> rho;
  std::string rho_queries;
  std::string baseline;
  std::string instructions_file;
  std::string out;
};

void cmd_gen_gadget(const Globals& g, const GadgetArgs& a) {
  const Scorer s = load_scorer(a.scorer);
  const Vocab& vocab = s.vocab();
  AttackOptions opts;
  opts.n = a.n;
  opts.iterations = a.iterations;
  opts.batch = a.batch;
  opts.patience = a.patience;
  opts.objective = parse_objective(a.objective);
  opts.sampling = parse_sampling(a.sampling);
  opts.seed = g.seed;
  opts.exec = exec_of(g);
  opts.placement = make_placement(parse_position(a.placement), a.instruction, vocab);

  if (!a.baseline.empty()) {
    const InstructionSet instructions = a.instructions_file.empty()
                                            ? InstructionSet::defaults()
                                            : InstructionSet::from_json(io::read_json(a.instructions_file));
    BaselineKind kind;
    std::string id;
    if (a.baseline == "init_repeat") {
      kind = BaselineKind::init_repeat;
    } else if (a.baseline == "random") {
      kind = BaselineKind::random;
    } else if (a.baseline.rfind("instruction:", 0) == 0) {
      kind = BaselineKind::instruction;
      id = a.baseline.substr(12);
    } else {
      throw ValidationError("unknown baseline \"" + a.baseline + "\"");
    }
    Gadget gadget = baseline_gadget(kind, a.n, vocab, g.seed, id, instructions);
    gadget.score = s.score(gadget.tokens);
    io::write_json(a.out, gadget_to_json(gadget, vocab, opts, "", a.baseline));
    print("baseline " + a.baseline + " \"" + gadget.tokens.surface + "\" -> " + a.out);
    return;
  }

  if (a.mode == "specific") {
    if (a.query.empty()) throw ValidationError("query-specific mode needs --query");
    opts.target_query = tokenize(a.query, vocab);
  } else if (a.mode != "independent") {
    throw ValidationError("mode must be independent or specific");
  }
  if (opts.sampling == Sampling::natural) {
    if (a.freq.empty()) throw ValidationError("natural sampling needs --freq");
    opts.token_weights = load_token_weights(io::read_text(a.freq), vocab);
  }
  std::shared_ptr<NgramLM> lm;
  if (!a.lm.empty()) {
    auto file = lm_file_from_json(io::read_json(a.lm));
    if (!(file.vocab == vocab)) throw ValidationError("language model vocabulary differs from the scorer's");
    lm = std::make_shared<NgramLM>(std::move(file.lm));
    double rho = 0.0;
    if (a.rho) {
      rho = *a.rho;
    } else {
      if (a.rho_queries.empty()) throw ValidationError("the perplexity constraint needs --rho or --queries");
      const auto qs = read_queries(a.rho_queries);
      const std::size_t k = std::min<std::size_t>(100, qs.size());
      for (std::size_t i = 0; i < k; ++i) rho += lm->perplexity(tokenize(qs[i].text, vocab));
      rho /= static_cast<double>(k);
    }
    opts.ppl = PplConstraint{a.alpha, rho, [lm](const TokenSeq& c) { return lm->perplexity(c); }};
  }
  const Gadget gadget = gen_gadget([&s](const TokenSeq& q) { return s.score(q); }, vocab, opts);
  io::write_json(a.out, gadget_to_json(gadget, vocab, opts, s.fingerprint(), "optimized"));
  print("gadget \"" + gadget.tokens.surface + "\" score " + io::fixed(gadget.score, 6) + " objective " +
        io::fixed(gadget.objective, 6) + " after " + std::to_string(gadget.trace.size()) +
        " iterations (" + std::to_string(gadget.evaluations) + " evaluations" +
        (gadget.early_abort ? ", early abort" : "") + ") -> " + a.out);
}

std::string join_text(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

void cmd_confound(const std::string& gadget_path, const std::string& queries,
                  const std::string& placement, const std::string& instruction, const std::string& out) {
  const GadgetFile gf = gadget_from_json(io::read_json(gadget_path));
  const Position pos = parse_position(placement);
  std::vector<json> rows;
  for (const auto& q : read_queries(queries)) {
    const std::string text = pos == Position::prefix ? join_text({instruction, gf.surface, q.text})
                                                     : join_text({instruction, q.text, gf.surface});
    json row = {{"id", q.id}, {"text", text}, {"original", q.text}};
    if (q.label) row["label"] = *q.label;
    rows.push_back(std::move(row));
  }
  io::write_jsonl(out, rows);
  print(std::to_string(rows.size()) + " confounded queries -> " + out);
}

std::vector<GadgetEntry> gadgets_from_files(const fs::path& base, const json& files) {
  std::vector<GadgetEntry> out;
  for (const auto& f : files) {
    const std::string path = resolve(base, f.get<std::string>());
    const GadgetFile gf = gadget_from_json(io::read_json(path));
    out.push_back({fs::path(path).stem().string(), gf.tokens, gf.scorer_fingerprint, gf.origin});
  }
  return out;
}

void cmd_attack_eval(const Globals& g, const std::string& config_path, const std::string& out) {
  const json cfg = io::read_json(config_path);
  const fs::path base = fs::path(config_path).parent_path();
  ExperimentInputs in;
  in.exec = exec_of(g);
  in.name = cfg.value("name", "experiment");
  if (!cfg.contains("eval")) throw ValidationError("experiment config needs \"eval\"");
  in.eval_texts = texts_of(read_queries(resolve(base, cfg["eval"].get<std::string>())));
  if (!cfg.contains("routers") || !cfg["routers"].is_object() || cfg["routers"].empty()) {
    throw ValidationError("experiment config needs a nonempty \"routers\" object");
  }
  for (const auto& [name, r] : cfg["routers"].items()) {
    auto s = std::make_shared<const Scorer>(load_scorer(resolve(base, r.at("scorer").get<std::string>())));
    if (r.contains("tau")) {
      const auto& t = r["tau"];
      in.tau[name] = t.is_string() && !(t.get<std::string>() == "-inf")
                         ? load_tau(resolve(base, t.get<std::string>()))
                         : tau_from_json(t);
    } else if (r.contains("epsilon") && r.contains("calibration")) {
      const auto seqs = tokenize_all(texts_of(read_queries(resolve(base, r["calibration"].get<std::string>()))),
                                     s->vocab());
      in.tau[name] = calibrate(*s, seqs, r["epsilon"].get<double>(), in.exec);
    } else {
      throw ValidationError("router " + name + " needs \"tau\" or \"epsilon\" + \"calibration\"");
    }
    in.scorers[name] = std::move(s);
  }
  if (cfg.contains("targets")) in.targets = cfg["targets"].get<std::vector<std::string>>();
  if (cfg.contains("placement")) {
    const auto& p = cfg["placement"];
    in.placement.position = parse_position(p.value("position", "prefix"));
    in.instruction_text = p.value("instruction", "");
  }
  if (cfg.contains("pricing")) {
    const auto& p = cfg["pricing"];
    in.pricing = PricingTable::from_json(p.is_string() ? io::read_json(resolve(base, p.get<std::string>())) : p);
  }
  in.strong_id = cfg.value("strong_id", "strong");
  in.weak_id = cfg.value("weak_id", "weak");
  const InstructionSet instructions =
      cfg.contains("instructions") ? InstructionSet::from_json(cfg["instructions"]) : InstructionSet::defaults();
  const Vocab& baseline_vocab = in.scorers.begin()->second->vocab();

  if (!cfg.contains("gadget_sets")) throw ValidationError("experiment config needs \"gadget_sets\"");
  for (const auto& set : cfg["gadget_sets"]) {
    GadgetSet gs;
    gs.label = set.at("label").get<std::string>();
    if (set.contains("surrogate")) gs.surrogate = set["surrogate"].get<std::string>();
    if (set.contains("gadgets")) gs.gadgets = gadgets_from_files(base, set["gadgets"]);
    if (set.contains("baseline")) {
      const std::string b = set["baseline"].get<std::string>();
      const auto count = set.value("count", 10);
      const auto n = set.value("n", std::size_t{10});
      for (int i = 0; i < count; ++i) {
        BaselineKind kind = BaselineKind::random;
        std::string id;
        if (b == "init_repeat") {
          kind = BaselineKind::init_repeat;
        } else if (b.rfind("instruction:", 0) == 0) {
          kind = BaselineKind::instruction;
          id = b.substr(12);
        } else if (b != "random") {
          throw ValidationError("unknown baseline \"" + b + "\"");
        }
        const Gadget bg = baseline_gadget(kind, n, baseline_vocab, g.seed + static_cast<std::uint64_t>(i), id,
                                          instructions);
        GadgetEntry e{gs.label + "-" + std::to_string(i), {}, "", b};
        for (auto t : bg.tokens.ids) e.tokens.push_back(baseline_vocab.token(t));
        gs.gadgets.push_back(std::move(e));
      }
    }
    in.sets.push_back(std::move(gs));
  }

  const EvalReport r = run_experiment(in);
  io::write_json(fs::path(out) / "report.json", r.to_json());
  io::write_text(fs::path(out) / "tables.csv", r.gadgets_csv());
  io::write_text(fs::path(out) / "summary.csv", r.summary_csv());
  for (const auto& c : r.cells) {
    print(c.set_label + " -> " + c.target + (c.white_box ? " (white-box)" : "") + ": upgrade " +
          (c.upgrade.count ? io::fixed(c.upgrade.mean, 2) + " +/- " + io::fixed(c.upgrade.se, 2) : "n/a") +
          ", downgrade " +
          (c.downgrade.count ? io::fixed(c.downgrade.mean, 2) + " +/- " + io::fixed(c.downgrade.se, 2)
                             : "n/a"));
  }
  print("report -> " + out);
}

void cmd_defend_eval(const std::string& lm_path, const std::string& clean_path,
                     const std::string& attack_path, const std::string& calibration_path, double fpr,
                     std::size_t bins, const std::string& out) {
  const auto file = lm_file_from_json(io::read_json(lm_path));
  auto ppl_of = [&](const std::string& path) {
    std::vector<double> v;
    for (const auto& q : read_queries(path)) v.push_back(file.lm.perplexity(tokenize(q.text, file.vocab)));
    return v;
  };
  const auto clean = ppl_of(clean_path);
  const auto attack = ppl_of(attack_path);
  const auto reference = calibration_path.empty() ? clean : ppl_of(calibration_path);
  const PplFilter filter = fit_ppl_threshold(reference, fpr);
  const RocCurve curve = roc(clean, attack);
  auto flagged = [&](const std::vector<double>& v) {
    std::size_t k = 0;
    for (double x : v) k += filter.flag(x);
    return static_cast<double>(k) / static_cast<double>(v.size());
  };
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const json report = {{"schema", kDefenseSchema},
                       {"auc", curve.auc},
                       {"auc_mann_whitney", mann_whitney_auc(clean, attack)},
                       {"threshold", filter.threshold},
                       {"fpr_target", fpr},
                       {"clean", {{"count", clean.size()}, {"mean_perplexity", mean(clean)}, {"flagged", flagged(clean)}}},
                       {"attack", {{"count", attack.size()}, {"mean_perplexity", mean(attack)}, {"flagged", flagged(attack)}}}};
  io::write_json(fs::path(out) / "report.json", report);
  io::write_json(fs::path(out) / "filter.json", filter.to_json());
  io::write_text(fs::path(out) / "roc.csv", roc_csv(curve));
  io::write_text(fs::path(out) / "histogram.csv", histogram_csv(clean, attack, bins));
  print("AUC " + io::fixed(curve.auc, 4) + ", threshold " + io::fixed(filter.threshold, 4) +
        ", flagged clean " + io::fixed(flagged(clean), 4) + " attack " + io::fixed(flagged(attack), 4) +
        " -> " + out);
}

std::string optional_cell(const json& stat, const char* key) {
  return stat.is_null() ? "" : io::fixed(stat.at(key).get<double>(), 4);
}

void cmd_report(const std::string& report_path, const std::string& out) {
  const json r = io::read_json(report_path);
  std::string csv = "set,surrogate,target,white_box,gadgets,upgrade_mean,upgrade_se,downgrade_mean,downgrade_se\n";
  std::string table;
  for (const auto& c : r.at("cells")) {
    const std::string surrogate = c["surrogate"].is_null() ? "" : c["surrogate"].get<std::string>();
    const std::string row = c["set"].get<std::string>() + "," + surrogate + "," + c["target"].get<std::string>() +
                            "," + (c["white_box"].get<bool>() ? "1" : "0") + "," +
                            std::to_string(c["gadgets"].size()) + "," + optional_cell(c["upgrade"], "mean") + "," +
                            optional_cell(c["upgrade"], "se") + "," + optional_cell(c["downgrade"], "mean") + "," +
                            optional_cell(c["downgrade"], "se");
    csv += row + "\n";
    print(row);
  }
  if (!out.empty()) io::write_text(out, csv);
}

GatewayServer* active_server = nullptr;

void on_signal(int) {
  if (active_server) active_server->stop();
}

struct ServeArgs {
  std::string scorer;
  std::string tau;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string strong_id = "strong";
  std::string weak_id = "weak";
  std::string strong_backend = "[strong] {input}";
  std::string weak_backend = "[weak] {input}";
  std::size_t window = 0;
  double epsilon = 0.5;
  double margin = 0.2;
  std::string action = "force_weak";
  std::string log;
};

void cmd_serve(const ServeArgs& a) {
  RouterConfig config{std::make_shared<const Scorer>(load_scorer(a.scorer)), load_tau(a.tau), a.strong_id,
                      a.weak_id};
  BackendMap backends;
  backends.emplace(a.strong_id, parse_backend(a.strong_backend));
  backends.emplace(a.weak_id, parse_backend(a.weak_backend));
  ServeOptions opts;
  if (a.window > 0) opts.monitor.emplace(a.window, a.epsilon, a.margin);
  opts.action = parse_flag_action(a.action);
  if (!a.log.empty()) opts.log = std::make_shared<TranscriptLog>(a.log);
  GatewayServer server(std::move(config), std::move(backends), std::move(opts));
  const int port = server.bind(a.host, a.port);
  active_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << a.host << ":" << port << std::endl;
  server.run();
  active_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reroute: LLM router integrity toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step");
  app.add_option("--jobs", g.jobs, "Worker threads (1 = serial, 0 = all cores)")->check(CLI::NonNegativeNumber);

  std::vector<std::string> corpora;
  std::string out;

  auto* bv = app.add_subcommand("build-vocab", "Build a vocabulary from corpora");
  bv->add_option("--corpus", corpora, "Corpus file (.jsonl or text), repeatable")->required();
  bv->add_option("--out", out)->required();
  bv->callback([&] { cmd_build_vocab(corpora, out); });

  std::string vocab_path;
  NgramLM::Options lm_opts;
  auto* tl = app.add_subcommand("train-lm", "Train the n-gram language model");
  tl->add_option("--vocab", vocab_path)->required();
  tl->add_option("--corpus", corpora)->required();
  tl->add_option("--order", lm_opts.order);
  tl->add_option("--lambda", lm_opts.lambda);
  tl->add_option("--k", lm_opts.k);
  tl->add_option("--out", out)->required();
  tl->callback([&] { cmd_train_lm(vocab_path, corpora, lm_opts, out); });

  std::size_t size = 1400;
  SplitSizes splits{1000, 200};
  DifficultyModel model;
  std::string wl_name = "synthetic";
  auto* gw = app.add_subcommand("gen-workload", "Generate a synthetic labeled workload");
  gw->add_option("--size", size);
  gw->add_option("--train", splits.train);
  gw->add_option("--calibration", splits.calibration);
  gw->add_option("--name", wl_name);
  gw->add_option("--rare-weight", model.rare_weight);
  gw->add_option("--length-weight", model.length_weight);
  gw->add_option("--noise", model.noise_sd);
  gw->add_option("--out", out, "Output directory")->required();
  gw->callback([&] { cmd_gen_workload(g, size, splits, model, wl_name, out); });

  TrainArgs ta;
  auto* ts = app.add_subcommand("train-scorer", "Train a router scorer");
  ts->add_option("--kind", ta.kind, "sw | mf | cls | llm_proxy | external");
  ts->add_option("--vocab", ta.vocab);
  ts->add_option("--data", ta.data, "Labeled queries (.jsonl with text, label)");
  ts->add_option("--dim", ta.dim);
  ts->add_option("--embed-seed", ta.embed_seed);
  ts->add_option("--lr", ta.fit.learning_rate);
  ts->add_option("--epochs", ta.fit.epochs);
  ts->add_option("--l2", ta.fit.l2);
  ts->add_option("--gamma", ta.fit.gamma);
  ts->add_option("--url", ta.url);
  ts->add_option("--bearer-env", ta.bearer_env);
  ts->add_option("--timeout-ms", ta.timeout_ms);
  ts->add_option("--out", ta.out)->required();
  ts->callback([&] { cmd_train_scorer(g, ta); });

  std::string scorer_path, queries_path;
  double epsilon = 0.5;
  auto* cal = app.add_subcommand("calibrate", "Pick tau for a target strong-model fraction");
  cal->add_option("--scorer", scorer_path)->required();
  cal->add_option("--queries", queries_path)->required();
  cal->add_option("--epsilon", epsilon);
  cal->add_option("--out", out);
  cal->callback([&] { cmd_calibrate(g, scorer_path, queries_path, epsilon, out); });

  GadgetArgs ga;
  double rho = 0.0;
  auto* gg = app.add_subcommand("gen-gadget", "Optimize a confounder gadget (or emit a baseline)");
  gg->add_option("--scorer", ga.scorer)->required();
  gg->add_option("--n", ga.n);
  gg->add_option("--T", ga.iterations);
  gg->add_option("--B", ga.batch);
  gg->add_option("--patience", ga.patience);
  gg->add_option("--mode", ga.mode, "independent | specific");
  gg->add_option("--query", ga.query, "Target query text for specific mode");
  gg->add_option("--objective", ga.objective, "maximize | minimize");
  gg->add_option("--sampling", ga.sampling, "uniform | natural");
  gg->add_option("--freq", ga.freq, "token<TAB>count table for natural sampling");
  gg->add_option("--placement", ga.placement, "prefix | suffix");
  gg->add_option("--instruction", ga.instruction);
  gg->add_option("--lm", ga.lm, "Language model file; enables the perplexity constraint");
  gg->add_option("--alpha", ga.alpha);
  auto* rho_opt = gg->add_option("--rho", rho);
  gg->add_option("--queries", ga.rho_queries, "Queries whose first 100 set rho");
  gg->add_option("--baseline", ga.baseline, "init_repeat | random | instruction:<id>");
  gg->add_option("--instructions", ga.instructions_file);
  gg->add_option("--out", ga.out)->required();
  gg->callback([&] {
    if (rho_opt->count() > 0) ga.rho = rho;
    cmd_gen_gadget(g, ga);
  });

  std::string gadget_path, placement = "prefix", instruction;
  auto* cf = app.add_subcommand("confound", "Apply a gadget to queries");
  cf->add_option("--gadget", gadget_path)->required();
  cf->add_option("--queries", queries_path)->required();
  cf->add_option("--placement", placement);
  cf->add_option("--instruction", instruction);
  cf->add_option("--out", out)->required();
  cf->callback([&] { cmd_confound(gadget_path, queries_path, placement, instruction, out); });

  std::string config_path;
  auto* ae = app.add_subcommand("attack-eval", "Run an upgrade-rate experiment");
  ae->add_option("--config", config_path)->required();
  ae->add_option("--out", out, "Output directory")->required();
  ae->callback([&] { cmd_attack_eval(g, config_path, out); });

  std::string lm_path, clean_path, attack_path, calibration_path;
  double fpr = 0.05;
  std::size_t bins = 30;
  auto* de = app.add_subcommand("defend-eval", "Evaluate the perplexity filter");
  de->add_option("--lm", lm_path)->required();
  de->add_option("--clean", clean_path)->required();
  de->add_option("--attack", attack_path)->required();
  de->add_option("--calibration", calibration_path, "Clean queries for the filter threshold");
  de->add_option("--fpr", fpr);
  de->add_option("--bins", bins);
  de->add_option("--out", out, "Output directory")->required();
  de->callback([&] { cmd_defend_eval(lm_path, clean_path, attack_path, calibration_path, fpr, bins, out); });

  ServeArgs sa;
  auto* sv = app.add_subcommand("serve", "Run the routing gateway over HTTP");
  sv->add_option("--scorer", sa.scorer)->required();
  sv->add_option("--tau", sa.tau, "Calibration file or number")->required();
  sv->add_option("--host", sa.host);
  sv->add_option("--port", sa.port);
  sv->add_option("--strong-id", sa.strong_id);
  sv->add_option("--weak-id", sa.weak_id);
  sv->add_option("--strong-backend", sa.strong_backend, "Stub template or http:// URL");
  sv->add_option("--weak-backend", sa.weak_backend, "Stub template or http:// URL");
  sv->add_option("--monitor-window", sa.window, "0 disables the per-user monitor");
  sv->add_option("--epsilon", sa.epsilon);
  sv->add_option("--margin", sa.margin);
  sv->add_option("--action", sa.action, "force_weak | reject");
  sv->add_option("--log", sa.log, "Transcript JSONL file");
  sv->callback([&] { cmd_serve(sa); });

  std::string report_path;
  auto* rp = app.add_subcommand("report", "Summarize an attack-eval report");
  rp->add_option("--report", report_path)->required();
  rp->add_option("--out", out);
  rp->callback([&] { cmd_report(report_path, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
