#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace reroute {

using TokenId = std::uint32_t;
using EmbeddingVector = std::vector<double>;

inline constexpr TokenId kUnkId = 0;
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kInitToken = "!";
inline constexpr std::string_view kTextcoreSchema = "textcore/v1";

struct TokenSeq {
  std::vector<TokenId> ids;
  std::string surface;

  [[nodiscard]] bool empty() const noexcept { return ids.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return ids.size(); }
};

// Dense token dictionary. Id 0 is always the unknown token.
class Vocab {
 public:
  Vocab();

  // Builds from an explicit token list. "<unk>" is placed at id 0 whether or
  // not it is listed; duplicates are rejected.
  static Vocab from_tokens(std::span<const std::string> tokens);

  // Collects every token produced by the tokenizer over `texts`, sorted
  // bytewise. The init token "!" is always included, so it is the first real
  // token of any vocabulary built from ordinary text.
  static Vocab build(std::span<const std::string> texts);

  [[nodiscard]] TokenId lookup(std::string_view token) const;
  [[nodiscard]] bool contains(std::string_view token) const;
  [[nodiscard]] const std::string& token(TokenId id) const;
  [[nodiscard]] std::size_t size() const noexcept { return tokens_.size(); }
  [[nodiscard]] const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Lowercased pieces of `text`: whitespace separates chunks, and inside a
// chunk every maximal run of ASCII punctuation is its own piece.
std::vector<std::string> split_words(std::string_view text);

TokenSeq tokenize(std::string_view text, const Vocab& vocab);

// Token strings joined by single spaces.
std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab);

// Translates ids between two vocabularies by token string.
TokenSeq remap(const TokenSeq& seq, const Vocab& from, const Vocab& to);

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t state = 0xcbf29ce484222325ULL) noexcept;

// Signed feature hashing over unigrams and adjacent bigrams.
//
// A unigram feature hashes the token bytes; a bigram feature hashes
// `a`, a 0x1f separator byte, then `b`, in one FNV-1a stream. The 64-bit
// hash is mixed with the seed (xor with seed * 0x9E3779B97F4A7C15, then the
// splitmix64 finalizer); bucket = mixed % dim, sign = top bit set ? -1 : +1.
// Nonempty inputs are L2-normalized.
class HashEmbedder {
 public:
  HashEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);

  [[nodiscard]] EmbeddingVector embed(const TokenSeq& seq, const Vocab& vocab) const;
  [[nodiscard]] EmbeddingVector embed_tokens(std::span<const std::string> tokens) const;

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  struct Slot {
    std::size_t bucket;
    double sign;
  };
  [[nodiscard]] Slot slot(std::uint64_t feature_hash) const noexcept;

 private:
  template <typename TokenAt>
  EmbeddingVector accumulate(std::size_t n, TokenAt&& token_at) const;

  std::size_t dim_;
  std::uint64_t seed_;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
// Zero when either side is the zero vector.
double cosine(std::span<const double> a, std::span<const double> b) noexcept;

// Interpolated unigram/bigram model with add-k smoothing:
//   p(t | prev) = lambda * p_bigram(t | prev) + (1 - lambda) * p_unigram(t)
// The first token of a sequence is scored by the unigram term alone. Order 1
// ignores lambda.
class NgramLM {
 public:
  struct Options {
    int order = 2;
    double lambda = 0.7;
    double k = 0.5;
  };

  static NgramLM train(std::span<const TokenSeq> corpus, std::size_t vocab_size,
                       const Options& options);
  static NgramLM train(std::span<const TokenSeq> corpus, std::size_t vocab_size) {
    return train(corpus, vocab_size, Options{});
  }

  [[nodiscard]] double unigram_prob(TokenId t) const;
  [[nodiscard]] double prob(TokenId t, std::optional<TokenId> prev) const;
  [[nodiscard]] double perplexity(std::span<const TokenId> ids) const;
  [[nodiscard]] double perplexity(const TokenSeq& seq) const { return perplexity(seq.ids); }

  [[nodiscard]] const Options& options() const noexcept { return options_; }
  [[nodiscard]] std::size_t vocab_size() const noexcept { return unigram_.size(); }
  [[nodiscard]] std::uint64_t total_tokens() const noexcept { return total_; }
  [[nodiscard]] std::uint64_t unigram_count(TokenId t) const { return unigram_.at(t); }
  [[nodiscard]] std::uint64_t bigram_count(TokenId prev, TokenId t) const;

  [[nodiscard]] nlohmann::json to_json() const;
  static NgramLM from_json(const nlohmann::json& j);

 private:
  static std::uint64_t key(TokenId prev, TokenId t) noexcept {
    return (static_cast<std::uint64_t>(prev) << 32) | t;
  }

  Options options_;
  std::vector<std::uint64_t> unigram_;
  std::vector<std::uint64_t> context_;  // bigrams starting at each token
  std::unordered_map<std::uint64_t, std::uint64_t> bigram_;
  std::uint64_t total_ = 0;
};

// textcore/v1 files: {"schema", "kind": "vocab"|"ngram_lm", "tokens", "lm"?}
nlohmann::json vocab_to_json(const Vocab& vocab);
Vocab vocab_from_json(const nlohmann::json& j);

struct LanguageModelFile {
  Vocab vocab;
  NgramLM lm;
};
nlohmann::json lm_file_to_json(const Vocab& vocab, const NgramLM& lm);
LanguageModelFile lm_file_from_json(const nlohmann::json& j);

// Reads a corpus: one document per nonblank line for plain text, or the
// "text" field of each line for .jsonl files.
std::vector<std::string> read_corpus(const std::filesystem::path& path);

}  // namespace reroute
