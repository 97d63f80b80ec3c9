#include <algorithm>
#include <cmath>
#include <numeric>

#include "reroute/confound.hpp"
#include "reroute/error.hpp"
#include "reroute/rng.hpp"

namespace reroute {

namespace {

class TokenSampler {
 public:
  TokenSampler(const Vocab& vocab, const AttackOptions& opts) : vocab_size_(vocab.size()) {
    if (opts.sampling == Sampling::natural) {
      if (opts.token_weights.size() != vocab.size()) {
        throw ValidationError("natural sampling needs one weight per vocabulary token");
      }
      cumulative_.resize(vocab.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < vocab.size(); ++i) {
        const double w = i == kUnkId ? 0.0 : opts.token_weights[i];
        if (!(w >= 0.0) || std::isinf(w)) throw ValidationError("token weights must be finite and >= 0");
        acc += w;
        cumulative_[i] = acc;
      }
      if (!(acc > 0.0)) throw ValidationError("natural sampling table has no mass on the vocabulary");
    }
  }

  TokenId draw(Rng& rng) const {
    if (cumulative_.empty()) return static_cast<TokenId>(1 + rng.below(vocab_size_ - 1));
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<TokenId>(it - cumulative_.begin());
  }

 private:
  std::size_t vocab_size_;
  std::vector<double> cumulative_;
};

}  // namespace

void validate(const AttackOptions& opts) {
  if (opts.n < 1) throw ValidationError("gadget length n must be >= 1");
  if (opts.iterations < 1) throw ValidationError("iterations T must be >= 1");
  if (opts.batch < 1) throw ValidationError("batch size B must be >= 1");
  if (opts.patience < 1) throw ValidationError("patience must be >= 1");
  if (opts.ppl) {
    if (!(opts.ppl->alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
    if (!(opts.ppl->rho > 0.0)) throw ValidationError("rho must be > 0");
    if (!opts.ppl->perplexity) throw ValidationError("perplexity constraint needs a language model");
  }
}

Gadget gen_gadget(const ScoreFn& score_fn, const Vocab& vocab, const AttackOptions& opts) {
  validate(opts);
  if (vocab.size() < 3) throw ValidationError("vocabulary must contain at least 2 tokens");
  if (!vocab.contains(kInitToken)) throw ValidationError("vocabulary lacks the init token \"!\"");
  const TokenSampler sampler(vocab, opts);
  Rng rng(opts.seed);

  const bool maximize = opts.objective == Objective::maximize;
  struct Eval {
    double objective;
    double score;
  };
  auto input_of = [&](const TokenSeq& c) {
    return opts.target_query ? confound(*opts.target_query, c, opts.placement) : c;
  };
  // Objective: score -/+ alpha * |PPL(c) - rho|, the sign chosen so the
  // penalty always works against the optimization direction.
  auto objective_of = [&](const TokenSeq& c, double score) {
    if (!opts.ppl) return score;
    const double penalty = opts.ppl->alpha * std::abs(opts.ppl->perplexity(c) - opts.ppl->rho);
    return maximize ? score - penalty : score + penalty;
  };
  auto better = [&](double a, double b) { return maximize ? a > b : a < b; };

  Gadget g;
  g.tokens.ids.assign(opts.n, vocab.lookup(kInitToken));
  Eval current;
  {
    const double s = score_fn(input_of(g.tokens));
    current = {objective_of(g.tokens, s), s};
    g.evaluations = 1;
  }

  std::vector<TokenSeq> candidates(static_cast<std::size_t>(opts.batch));
  std::vector<TokenSeq> inputs(candidates.size());
  std::vector<Eval> evals(candidates.size());
  int stale = 0;
  for (int t = 1; t <= opts.iterations; ++t) {
    const auto j = static_cast<std::size_t>(rng.below(opts.n));
    for (auto& cand : candidates) {
      cand.ids = g.tokens.ids;
      cand.ids[j] = sampler.draw(rng);
    }
    kernels::for_each_index(
        candidates.size(),
        [&](std::size_t b) {
          const double s = score_fn(input_of(candidates[b]));
          evals[b] = {objective_of(candidates[b], s), s};
        },
        opts.exec);
    g.evaluations += candidates.size();

    std::optional<std::size_t> best;
    double best_value = current.objective;
    for (std::size_t b = 0; b < candidates.size(); ++b) {
      if (better(evals[b].objective, best_value)) {
        best_value = evals[b].objective;
        best = b;
      }
    }
    if (best) {
      g.tokens.ids = candidates[*best].ids;
      current = evals[*best];
      stale = 0;
    } else {
      ++stale;
    }
    g.trace.push_back({t, current.objective, best.has_value()});
    if (stale >= opts.patience) {
      g.early_abort = t < opts.iterations;
      break;
    }
  }
  g.objective = current.objective;
  g.score = current.score;
  g.tokens.surface = detokenize(g.tokens.ids, vocab);
  return g;
}

std::vector<double> load_token_weights(const std::string& tsv_text, const Vocab& vocab) {
  std::vector<double> weights(vocab.size(), 0.0);
  std::size_t start = 0;
  std::size_t lineno = 0;
  while (start < tsv_text.size()) {
    auto end = tsv_text.find('\n', start);
    if (end == std::string::npos) end = tsv_text.size();
    std::string line = tsv_text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("frequency table line " + std::to_string(lineno) + ": expected token<TAB>count");
    }
    const std::string token = line.substr(0, tab);
    char* stop = nullptr;
    const std::string count_text = line.substr(tab + 1);
    const double count = std::strtod(count_text.c_str(), &stop);
    if (stop == count_text.c_str() || !(count >= 0.0)) {
      throw ValidationError("frequency table line " + std::to_string(lineno) + ": bad count");
    }
    if (vocab.contains(token)) weights[vocab.lookup(token)] += count;
  }
  return weights;
}

}  // namespace reroute
