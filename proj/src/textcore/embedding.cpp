#include <cmath>

#include "reroute/error.hpp"
#include "reroute/textcore.hpp"

namespace reroute {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) noexcept {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw ValidationError("embedding dimension must be >= 2");
}

HashEmbedder::Slot HashEmbedder::slot(std::uint64_t feature_hash) const noexcept {
  std::uint64_t z = feature_hash ^ (seed_ * 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return {static_cast<std::size_t>(z % dim_), (z >> 63) ? -1.0 : 1.0};
}

template <typename TokenAt>
EmbeddingVector HashEmbedder::accumulate(std::size_t n, TokenAt&& token_at) const {
  EmbeddingVector v(dim_, 0.0);
  if (n == 0) return v;
  std::uint64_t prev_state = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string_view tok = token_at(i);
    const std::uint64_t uni = fnv1a64(tok);
    const auto s = slot(uni);
    v[s.bucket] += s.sign;
    if (i > 0) {
      // prev_state already holds FNV(a) followed by the separator byte.
      const auto b = slot(fnv1a64(tok, prev_state));
      v[b.bucket] += b.sign;
    }
    prev_state = fnv1a64("\x1f", uni);
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  }
  return v;
}

EmbeddingVector HashEmbedder::embed(const TokenSeq& seq, const Vocab& vocab) const {
  return accumulate(seq.ids.size(),
                    [&](std::size_t i) -> std::string_view { return vocab.token(seq.ids[i]); });
}

EmbeddingVector HashEmbedder::embed_tokens(std::span<const std::string> tokens) const {
  return accumulate(tokens.size(), [&](std::size_t i) -> std::string_view { return tokens[i]; });
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) noexcept {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace reroute
