#include <algorithm>
#include <set>

#include "reroute/error.hpp"
#include "reroute/textcore.hpp"

namespace reroute {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(unsigned char c) {
  return c < 0x80 && ((c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) ||
                      (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e));
}

char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

}  // namespace

Vocab::Vocab() : tokens_{std::string(kUnkToken)} { index_.emplace(kUnkToken, kUnkId); }

Vocab Vocab::from_tokens(std::span<const std::string> tokens) {
  Vocab v;
  for (const auto& t : tokens) {
    if (t == kUnkToken) continue;
    if (t.empty()) throw ValidationError("vocabulary contains an empty token");
    auto [it, inserted] = v.index_.emplace(t, static_cast<TokenId>(v.tokens_.size()));
    if (!inserted) throw ValidationError("duplicate vocabulary token \"" + t + "\"");
    v.tokens_.push_back(t);
  }
  return v;
}

Vocab Vocab::build(std::span<const std::string> texts) {
  std::set<std::string> seen{std::string(kInitToken)};
  for (const auto& text : texts) {
    for (auto& w : split_words(text)) seen.insert(std::move(w));
  }
  seen.erase(std::string(kUnkToken));
  const std::vector<std::string> sorted(seen.begin(), seen.end());
  return from_tokens(sorted);
}

TokenId Vocab::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocab::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::string_view chunk = text.substr(start, i - start);
    if (chunk.empty()) continue;
    if (chunk == kUnkToken) {
      out.emplace_back(kUnkToken);
      continue;
    }
    std::size_t j = 0;
    while (j < chunk.size()) {
      const bool punct = is_punct(static_cast<unsigned char>(chunk[j]));
      std::string piece;
      while (j < chunk.size() && is_punct(static_cast<unsigned char>(chunk[j])) == punct) {
        piece += lower(static_cast<unsigned char>(chunk[j]));
        ++j;
      }
      out.push_back(std::move(piece));
    }
  }
  return out;
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab) {
  TokenSeq seq;
  seq.surface = std::string(text);
  for (const auto& w : split_words(text)) seq.ids.push_back(vocab.lookup(w));
  return seq;
}

std::string detokenize(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

TokenSeq remap(const TokenSeq& seq, const Vocab& from, const Vocab& to) {
  if (&from == &to || from == to) return seq;
  TokenSeq out;
  out.surface = seq.surface;
  out.ids.reserve(seq.ids.size());
  for (TokenId id : seq.ids) out.ids.push_back(to.lookup(from.token(id)));
  return out;
}

}  // namespace reroute
