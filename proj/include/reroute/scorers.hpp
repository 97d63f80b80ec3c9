#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "reroute/textcore.hpp"

namespace reroute {

inline constexpr std::string_view kScorersSchema = "scorers/v1";

enum class ScorerKind { sw, mf, cls, llm_proxy, external };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

// Label of a reference query: 0 = weak model sufficed, 0.5 = tie,
// 1 = strong model required.
struct PreferenceExample {
  TokenSeq query;
  double label = 0.0;
};

bool is_valid_label(double label) noexcept;

// Similarity-weighted ranking: the stored reference set itself.
struct SwParams {
  std::vector<EmbeddingVector> embeddings;
  std::vector<double> labels;
  double gamma = 5.0;
};

// Bilinear model: score_m(x) = v_m^T W e(x) + b_m for m in {strong, weak}.
struct MfParams {
  std::size_t dim = 0;
  std::vector<double> w;  // dim x dim, row-major
  EmbeddingVector v_strong;
  EmbeddingVector v_weak;
  double b_strong = 0.0;
  double b_weak = 0.0;
};

// Three-way linear classifier. Class order: weak better, tie, strong better.
struct ClsParams {
  std::array<EmbeddingVector, 3> weights;
  std::array<double, 3> bias{};
};

// Cumulative-logit ordinal model over grades 1..5:
//   P(grade <= k) = sigmoid(thresholds[k-1] - w^T e(x)).
struct LlmProxyParams {
  EmbeddingVector w;
  std::array<double, 4> thresholds{};
};

struct ExternalEndpoint {
  std::string url;
  std::string bearer_env;  // name of the environment variable holding the token
  std::chrono::milliseconds timeout{10000};
};

struct ScorerParams {
  ScorerKind kind = ScorerKind::sw;
  std::variant<SwParams, MfParams, ClsParams, LlmProxyParams, ExternalEndpoint> payload;
  std::vector<double> loss_history;
};

struct FitOptions {
  double learning_rate = 2.0;
  int epochs = 300;
  std::uint64_t seed = 0;
  double gamma = 5.0;   // SW only
  double l2 = 1e-4;     // weight decay for the gradient-trained kinds
};

// Trains a scorer with full-batch gradient descent (storage for SW). Records
// the mean training loss of every epoch in loss_history.
ScorerParams fit_scorer(ScorerKind kind, std::span<const PreferenceExample> examples,
                        const Vocab& vocab, const HashEmbedder& embedder,
                        const FitOptions& options = {});

// Score in [0, 1] for an already-embedded query. Throws for EXTERNAL.
double score_embedding(const ScorerParams& params, std::span<const double> e);

double score_query(const ScorerParams& params, const TokenSeq& query, const Vocab& vocab,
                   const HashEmbedder& embedder);

// POSTs the query text to the endpoint and returns the numeric reply clamped
// to [0, 1]. The reply body may be a bare number or a JSON object with a
// numeric "score" field.
double external_score(const ExternalEndpoint& endpoint, std::string_view text);

// Everything needed to score raw text: vocabulary, embedder config and
// trained parameters. This is the unit persisted in scorers/v1 files.
class Scorer {
 public:
  Scorer(Vocab vocab, HashEmbedder embedder, ScorerParams params);

  [[nodiscard]] double score(const TokenSeq& query) const;
  [[nodiscard]] double score_text(std::string_view text) const;

  [[nodiscard]] const Vocab& vocab() const noexcept { return vocab_; }
  [[nodiscard]] const HashEmbedder& embedder() const noexcept { return embedder_; }
  [[nodiscard]] const ScorerParams& params() const noexcept { return params_; }
  [[nodiscard]] ScorerKind kind() const noexcept { return params_.kind; }

  // FNV-1a over the serialized parameters, hex encoded.
  [[nodiscard]] const std::string& fingerprint() const noexcept { return fingerprint_; }

  [[nodiscard]] nlohmann::json to_json() const;
  static Scorer from_json(const nlohmann::json& j);

 private:
  Vocab vocab_;
  HashEmbedder embedder_;
  ScorerParams params_;
  std::string fingerprint_;
};

nlohmann::json params_to_json(const ScorerParams& params);
ScorerParams params_from_json(ScorerKind kind, const nlohmann::json& j);

}  // namespace reroute
