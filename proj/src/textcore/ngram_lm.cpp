#include <algorithm>
#include <cmath>
#include <limits>

#include "reroute/error.hpp"
#include "reroute/io.hpp"
#include "reroute/textcore.hpp"

namespace reroute {

NgramLM NgramLM::train(std::span<const TokenSeq> corpus, std::size_t vocab_size,
                       const Options& options) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  if (options.order != 1 && options.order != 2) throw ValidationError("order must be 1 or 2");
  if (!(options.lambda >= 0.0 && options.lambda < 1.0)) {
    throw ValidationError("lambda must lie in [0, 1)");
  }
  if (!(options.k >= 0.0)) throw ValidationError("k must be >= 0");
  if (vocab_size == 0) throw ValidationError("empty vocabulary");

  NgramLM lm;
  lm.options_ = options;
  lm.unigram_.assign(vocab_size, 0);
  lm.context_.assign(vocab_size, 0);
  for (const auto& seq : corpus) {
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      const TokenId t = seq.ids[i];
      if (t >= vocab_size) throw ValidationError("token id outside vocabulary");
      ++lm.unigram_[t];
      ++lm.total_;
      if (i > 0) {
        ++lm.bigram_[key(seq.ids[i - 1], t)];
        ++lm.context_[seq.ids[i - 1]];
      }
    }
  }
  if (lm.total_ == 0) throw ValidationError("empty corpus");
  return lm;
}

double NgramLM::unigram_prob(TokenId t) const {
  const double v = static_cast<double>(unigram_.size());
  return (static_cast<double>(unigram_.at(t)) + options_.k) /
         (static_cast<double>(total_) + options_.k * v);
}

std::uint64_t NgramLM::bigram_count(TokenId prev, TokenId t) const {
  auto it = bigram_.find(key(prev, t));
  return it == bigram_.end() ? 0 : it->second;
}

double NgramLM::prob(TokenId t, std::optional<TokenId> prev) const {
  const double uni = unigram_prob(t);
  if (options_.order == 1 || !prev) return uni;
  const double v = static_cast<double>(unigram_.size());
  const double ctx = static_cast<double>(context_.at(*prev));
  const double denom = ctx + options_.k * v;
  // An unseen context with k = 0 has no bigram distribution; fall back.
  const double bi =
      denom > 0.0 ? (static_cast<double>(bigram_count(*prev, t)) + options_.k) / denom : uni;
  return options_.lambda * bi + (1.0 - options_.lambda) * uni;
}

double NgramLM::perplexity(std::span<const TokenId> ids) const {
  if (ids.empty()) throw ValidationError("undefined perplexity");
  double nll = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double p = prob(ids[i], i == 0 ? std::nullopt : std::optional<TokenId>(ids[i - 1]));
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    nll -= std::log(p);
  }
  return std::exp(nll / static_cast<double>(ids.size()));
}

nlohmann::json NgramLM::to_json() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(bigram_.size());
  for (const auto& [k, c] : bigram_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  nlohmann::json bigrams = nlohmann::json::array();
  for (auto k : keys) {
    bigrams.push_back({static_cast<TokenId>(k >> 32), static_cast<TokenId>(k & 0xffffffffULL),
                       bigram_.at(k)});
  }
  return {{"order", options_.order},
          {"lambda", options_.lambda},
          {"k", options_.k},
          {"total", total_},
          {"unigram", unigram_},
          {"bigram", std::move(bigrams)}};
}

NgramLM NgramLM::from_json(const nlohmann::json& j) {
  NgramLM lm;
  try {
    lm.options_.order = j.at("order").get<int>();
    lm.options_.lambda = j.at("lambda").get<double>();
    lm.options_.k = j.at("k").get<double>();
    lm.total_ = j.at("total").get<std::uint64_t>();
    lm.unigram_ = j.at("unigram").get<std::vector<std::uint64_t>>();
    lm.context_.assign(lm.unigram_.size(), 0);
    for (const auto& row : j.at("bigram")) {
      const auto prev = row.at(0).get<TokenId>();
      const auto t = row.at(1).get<TokenId>();
      const auto c = row.at(2).get<std::uint64_t>();
      if (prev >= lm.unigram_.size() || t >= lm.unigram_.size()) {
        throw ValidationError("bigram id outside vocabulary");
      }
      lm.bigram_[key(prev, t)] = c;
      lm.context_[prev] += c;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed language model: ") + e.what());
  }
  if (lm.unigram_.empty()) throw ValidationError("malformed language model: empty vocabulary");
  return lm;
}

nlohmann::json vocab_to_json(const Vocab& vocab) {
  return {{"schema", kTextcoreSchema}, {"kind", "vocab"}, {"tokens", vocab.tokens()}};
}

Vocab vocab_from_json(const nlohmann::json& j) {
  io::expect_schema(j, kTextcoreSchema);
  if (!j.contains("tokens") || !j["tokens"].is_array()) {
    throw ValidationError("vocabulary file has no token list");
  }
  const auto tokens = j["tokens"].get<std::vector<std::string>>();
  if (tokens.empty() || tokens.front() != kUnkToken) {
    throw ValidationError("vocabulary must start with " + std::string(kUnkToken));
  }
  return Vocab::from_tokens(tokens);
}

nlohmann::json lm_file_to_json(const Vocab& vocab, const NgramLM& lm) {
  if (lm.vocab_size() != vocab.size()) throw ValidationError("language model/vocabulary size mismatch");
  return {{"schema", kTextcoreSchema},
          {"kind", "ngram_lm"},
          {"tokens", vocab.tokens()},
          {"lm", lm.to_json()}};
}

LanguageModelFile lm_file_from_json(const nlohmann::json& j) {
  io::expect_schema(j, kTextcoreSchema);
  if (j.value("kind", "") != "ngram_lm" || !j.contains("lm")) {
    throw ValidationError("not a language model file");
  }
  LanguageModelFile f{vocab_from_json(j), NgramLM::from_json(j["lm"])};
  if (f.lm.vocab_size() != f.vocab.size()) {
    throw ValidationError("language model/vocabulary size mismatch");
  }
  return f;
}

std::vector<std::string> read_corpus(const std::filesystem::path& path) {
  std::vector<std::string> docs;
  if (path.extension() == ".jsonl") {
    for (const auto& row : io::read_jsonl(path)) {
      if (!row.is_object() || !row.contains("text") || !row["text"].is_string()) {
        throw ValidationError(path.string() + ": JSONL row without string field \"text\"");
      }
      docs.push_back(row["text"].get<std::string>());
    }
    return docs;
  }
  const auto text = io::read_text(path);
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) docs.push_back(std::move(line));
    start = end + 1;
  }
  return docs;
}

}  // namespace reroute
