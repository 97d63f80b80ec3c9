// Serial reference vs OpenMP for the two hot loops: batch scoring and the
// candidate evaluation inside gadget search.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "CLI11.hpp"
#include "reroute/bench.hpp"
#include "reroute/confound.hpp"
#include "reroute/kernels.hpp"

using namespace reroute;

namespace {

template <typename F>
double best_seconds(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel timings"};
  std::size_t queries = 20000;
  int reps = 3;
  int jobs = 0;
  std::string kind = "sw";
  app.add_option("--queries", queries, "queries scored per batch");
  app.add_option("--reps", reps, "repetitions; the best time is kept");
  app.add_option("--jobs", jobs, "OpenMP threads (0 = default team)");
  app.add_option("--scorer", kind, "sw, mf, cls or llm_proxy");
  CLI11_PARSE(app, argc, argv);

  const Workload w = gen_workload(queries + 1000, 1, {}, {1000, 0});
  const Vocab vocab = Vocab::build(w.all_texts());
  const HashEmbedder embedder;
  std::vector<PreferenceExample> train;
  for (const auto* q : w.split(Split::train)) train.push_back({tokenize(q->text, vocab), *q->label});
  FitOptions fo;
  fo.epochs = 50;
  const Scorer scorer(vocab, embedder, fit_scorer(parse_scorer_kind(kind), train, vocab, embedder, fo));
  std::vector<TokenSeq> eval;
  for (const auto* q : w.split(Split::eval)) eval.push_back(tokenize(q->text, vocab));

  std::printf("threads available: %d, queries: %zu, scorer: %s\n", kernels::max_threads(), eval.size(),
              kind.c_str());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial s", "openmp s", "speedup");

  const kernels::SeqFn fn = [&](const TokenSeq& q) { return scorer.score(q); };
  std::vector<double> a, b;
  const double ts = best_seconds(reps, [&] { a = kernels::evaluate_serial(fn, eval); });
  const double tp = best_seconds(reps, [&] { b = kernels::evaluate_parallel(fn, eval, jobs); });
  row("batch scoring", ts, tp, a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);

  AttackOptions opts;
  opts.seed = 3;
  opts.patience = opts.iterations;
  Gadget gs, gp;
  opts.exec.jobs = 1;
  const double gts = best_seconds(reps, [&] { gs = gen_gadget(fn, vocab, opts); });
  opts.exec.jobs = jobs == 1 ? 0 : jobs;
  const double gtp = best_seconds(reps, [&] { gp = gen_gadget(fn, vocab, opts); });
  row("gadget search", gts, gtp, gs.tokens.ids == gp.tokens.ids && gs.objective == gp.objective);
  return 0;
}
