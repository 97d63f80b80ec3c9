#include "reroute/error.hpp"
#include "reroute/io.hpp"
#include "reroute/scorers.hpp"

namespace reroute {

using nlohmann::json;

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::sw: return "sw";
    case ScorerKind::mf: return "mf";
    case ScorerKind::cls: return "cls";
    case ScorerKind::llm_proxy: return "llm_proxy";
    case ScorerKind::external: return "external";
  }
  return "?";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "sw" || name == "SW") return ScorerKind::sw;
  if (name == "mf" || name == "MF") return ScorerKind::mf;
  if (name == "cls" || name == "CLS") return ScorerKind::cls;
  if (name == "llm_proxy" || name == "llmproxy" || name == "LLMPROXY") return ScorerKind::llm_proxy;
  if (name == "external" || name == "EXTERNAL") return ScorerKind::external;
  throw ValidationError("unknown scorer kind \"" + std::string(name) + "\"");
}

json params_to_json(const ScorerParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SwParams>) {
          return {{"gamma", p.gamma}, {"embeddings", p.embeddings}, {"labels", p.labels}};
        } else if constexpr (std::is_same_v<T, MfParams>) {
          return {{"dim", p.dim},           {"w", p.w},
                  {"v_strong", p.v_strong}, {"v_weak", p.v_weak},
                  {"b_strong", p.b_strong}, {"b_weak", p.b_weak}};
        } else if constexpr (std::is_same_v<T, ClsParams>) {
          return {{"weights", p.weights}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<T, LlmProxyParams>) {
          return {{"w", p.w}, {"thresholds", p.thresholds}};
        } else {
          return {{"url", p.url}, {"bearer_env", p.bearer_env}, {"timeout_ms", p.timeout.count()}};
        }
      },
      params.payload);
}

ScorerParams params_from_json(ScorerKind kind, const json& j) {
  ScorerParams params;
  params.kind = kind;
  switch (kind) {
    case ScorerKind::sw: {
      SwParams p;
      p.gamma = j.at("gamma").get<double>();
      p.embeddings = j.at("embeddings").get<std::vector<EmbeddingVector>>();
      p.labels = j.at("labels").get<std::vector<double>>();
      if (p.embeddings.empty() || p.embeddings.size() != p.labels.size()) {
        throw ValidationError("SW scorer needs >= 1 stored example with one label each");
      }
      params.payload = std::move(p);
      break;
    }
    case ScorerKind::mf: {
      MfParams p;
      p.dim = j.at("dim").get<std::size_t>();
      p.w = j.at("w").get<std::vector<double>>();
      p.v_strong = j.at("v_strong").get<EmbeddingVector>();
      p.v_weak = j.at("v_weak").get<EmbeddingVector>();
      p.b_strong = j.at("b_strong").get<double>();
      p.b_weak = j.at("b_weak").get<double>();
      if (p.w.size() != p.dim * p.dim || p.v_strong.size() != p.dim || p.v_weak.size() != p.dim) {
        throw ValidationError("MF scorer dimensions are inconsistent");
      }
      params.payload = std::move(p);
      break;
    }
    case ScorerKind::cls: {
      ClsParams p;
      p.weights = j.at("weights").get<std::array<EmbeddingVector, 3>>();
      p.bias = j.at("bias").get<std::array<double, 3>>();
      params.payload = std::move(p);
      break;
    }
    case ScorerKind::llm_proxy: {
      LlmProxyParams p;
      p.w = j.at("w").get<EmbeddingVector>();
      p.thresholds = j.at("thresholds").get<std::array<double, 4>>();
      for (std::size_t k = 1; k < 4; ++k) {
        if (!(p.thresholds[k] > p.thresholds[k - 1])) {
          throw ValidationError("LLM-proxy thresholds must be strictly increasing");
        }
      }
      params.payload = std::move(p);
      break;
    }
    case ScorerKind::external: {
      ExternalEndpoint p;
      p.url = j.at("url").get<std::string>();
      p.bearer_env = j.value("bearer_env", "");
      p.timeout = std::chrono::milliseconds(j.value("timeout_ms", 10000));
      params.payload = std::move(p);
      break;
    }
  }
  return params;
}

namespace {

void check_dimensions(const ScorerParams& params, std::size_t dim) {
  auto bad = [] { throw ValidationError("scorer parameters do not match embedder dimension"); };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SwParams>) {
          if (p.embeddings.empty() || p.embeddings.size() != p.labels.size()) {
            throw ValidationError("SW scorer needs >= 1 stored example with one label each");
          }
          for (const auto& e : p.embeddings) {
            if (e.size() != dim) bad();
          }
        } else if constexpr (std::is_same_v<T, MfParams>) {
          if (p.dim != dim) bad();
        } else if constexpr (std::is_same_v<T, ClsParams>) {
          for (const auto& w : p.weights) {
            if (w.size() != dim) bad();
          }
        } else if constexpr (std::is_same_v<T, LlmProxyParams>) {
          if (p.w.size() != dim) bad();
        }
      },
      params.payload);
}

}  // namespace

Scorer::Scorer(Vocab vocab, HashEmbedder embedder, ScorerParams params)
    : vocab_(std::move(vocab)), embedder_(embedder), params_(std::move(params)) {
  check_dimensions(params_, embedder_.dim());
  json canonical = {{"kind", to_string(params_.kind)},
                    {"embedder", {{"dim", embedder_.dim()}, {"seed", embedder_.seed()}}},
                    {"tokens", vocab_.tokens()},
                    {"params", params_to_json(params_)}};
  fingerprint_ = io::hex64(fnv1a64(canonical.dump()));
}

double Scorer::score(const TokenSeq& query) const {
  if (params_.kind == ScorerKind::external) {
    return external_score(std::get<ExternalEndpoint>(params_.payload),
                          detokenize(query.ids, vocab_));
  }
  return score_query(params_, query, vocab_, embedder_);
}

double Scorer::score_text(std::string_view text) const {
  if (params_.kind == ScorerKind::external) {
    return external_score(std::get<ExternalEndpoint>(params_.payload), text);
  }
  return score(tokenize(text, vocab_));
}

json Scorer::to_json() const {
  return {{"schema", kScorersSchema},
          {"kind", to_string(params_.kind)},
          {"fingerprint", fingerprint_},
          {"embedder", {{"dim", embedder_.dim()}, {"seed", embedder_.seed()}}},
          {"tokens", vocab_.tokens()},
          {"params", params_to_json(params_)},
          {"loss_history", params_.loss_history}};
}

Scorer Scorer::from_json(const json& j) {
  io::expect_schema(j, kScorersSchema);
  try {
    const auto kind = parse_scorer_kind(j.at("kind").get<std::string>());
    auto params = params_from_json(kind, j.at("params"));
    params.loss_history = j.value("loss_history", std::vector<double>{});
    const auto& emb = j.at("embedder");
    HashEmbedder embedder(emb.at("dim").get<std::size_t>(), emb.at("seed").get<std::uint64_t>());
    Vocab vocab = j.contains("tokens")
                      ? Vocab::from_tokens(j["tokens"].get<std::vector<std::string>>())
                      : Vocab();
    return Scorer(std::move(vocab), embedder, std::move(params));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed scorer file: ") + e.what());
  }
}

}  // namespace reroute
