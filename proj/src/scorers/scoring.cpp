#include <algorithm>
#include <cmath>

#include "reroute/error.hpp"
#include "reroute/scorers.hpp"

namespace reroute {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double score_sw(const SwParams& p, std::span<const double> e) {
  // Softmax-style weights; shifting by the max similarity keeps exp in range
  // and cancels in the ratio.
  double best = -1.0;
  std::vector<double> sims(p.embeddings.size());
  for (std::size_t k = 0; k < p.embeddings.size(); ++k) {
    sims[k] = cosine(e, p.embeddings[k]);
    best = std::max(best, sims[k]);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < sims.size(); ++k) {
    const double w = std::exp(p.gamma * (sims[k] - best));
    num += w * p.labels[k];
    den += w;
  }
  return num / den;
}

double score_mf(const MfParams& p, std::span<const double> e) {
  double z = p.b_strong - p.b_weak;
  for (std::size_t r = 0; r < p.dim; ++r) {
    const double* row = p.w.data() + r * p.dim;
    double we = 0.0;
    for (std::size_t c = 0; c < p.dim; ++c) we += row[c] * e[c];
    z += (p.v_strong[r] - p.v_weak[r]) * we;
  }
  return sigmoid(z);
}

double score_cls(const ClsParams& p, std::span<const double> e) {
  std::array<double, 3> logits{};
  for (std::size_t c = 0; c < 3; ++c) logits[c] = dot(p.weights[c], e) + p.bias[c];
  const double m = *std::max_element(logits.begin(), logits.end());
  double den = 0.0;
  for (double l : logits) den += std::exp(l - m);
  const double p_weak = std::exp(logits[0] - m) / den;
  return 1.0 - p_weak;
}

double score_llm_proxy(const LlmProxyParams& p, std::span<const double> e) {
  const double s = dot(p.w, e);
  // E[grade] = 5 - sum_k P(grade <= k)
  double cumulative = 0.0;
  for (double theta : p.thresholds) cumulative += sigmoid(theta - s);
  const double grade = 5.0 - cumulative;
  return (grade - 1.0) / 4.0;
}

}  // namespace

double score_embedding(const ScorerParams& params, std::span<const double> e) {
  double s = 0.0;
  switch (params.kind) {
    case ScorerKind::sw:
      s = score_sw(std::get<SwParams>(params.payload), e);
      break;
    case ScorerKind::mf:
      s = score_mf(std::get<MfParams>(params.payload), e);
      break;
    case ScorerKind::cls:
      s = score_cls(std::get<ClsParams>(params.payload), e);
      break;
    case ScorerKind::llm_proxy:
      s = score_llm_proxy(std::get<LlmProxyParams>(params.payload), e);
      break;
    case ScorerKind::external:
      throw ValidationError("external scorers must be queried with external_score");
  }
  return std::clamp(s, 0.0, 1.0);
}

double score_query(const ScorerParams& params, const TokenSeq& query, const Vocab& vocab,
                   const HashEmbedder& embedder) {
  if (params.kind == ScorerKind::external) {
    throw ValidationError("external scorers must be queried with external_score");
  }
  return score_embedding(params, embedder.embed(query, vocab));
}

}  // namespace reroute
