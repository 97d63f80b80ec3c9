#include <cmath>
#include <cstdlib>

#include "reroute/error.hpp"
#include "reroute/gateway.hpp"

namespace reroute {

std::int64_t Money::micro() const noexcept {
  constexpr std::int64_t kScale = 1000000;
  const std::int64_t q = pico_ / kScale;
  const std::int64_t r = pico_ % kScale;
  if (2 * std::llabs(r) >= kScale) return q + (pico_ < 0 ? -1 : 1);
  return q;
}

std::string Money::to_string() const {
  const std::int64_t m = micro();
  const std::int64_t a = std::llabs(m);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", m < 0 ? "-" : "", static_cast<long long>(a / 1000000),
                static_cast<long long>(a % 1000000));
  return buf;
}

std::int64_t parse_price_micro(const nlohmann::json& value) {
  std::string text;
  if (value.is_string()) {
    text = value.get<std::string>();
  } else if (value.is_number()) {
    // Shortest round-trip decimal of the double, e.g. 2.5 -> "2.5".
    text = value.dump();
  } else {
    throw ValidationError("price must be a number or decimal string");
  }
  static constexpr auto bad = [](const std::string& t) {
    return ValidationError("invalid price \"" + t + "\" (non-negative decimal, at most 6 places)");
  };
  std::size_t i = 0;
  std::int64_t whole = 0;
  if (i == text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) throw bad(text);
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    whole = whole * 10 + (text[i] - '0');
    if (whole > 1000000000000LL) throw bad(text);
    ++i;
  }
  std::int64_t frac = 0;
  int places = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      if (++places > 6) throw bad(text);
      frac = frac * 10 + (text[i] - '0');
      ++i;
    }
  }
  if (i != text.size()) throw bad(text);
  for (; places < 6; ++places) frac *= 10;
  return whole * 1000000 + frac;
}

PricingTable PricingTable::from_json(const nlohmann::json& j) {
  const auto& models = j.contains("models") ? j["models"] : j;
  if (!models.is_object()) throw ValidationError("pricing must map model ids to prices");
  PricingTable table;
  for (const auto& [id, p] : models.items()) {
    if (!p.is_object() || !p.contains("input") || !p.contains("output")) {
      throw ValidationError("pricing for " + id + " needs input and output prices");
    }
    table.models[id] = {parse_price_micro(p["input"]), parse_price_micro(p["output"])};
  }
  return table;
}

nlohmann::json PricingTable::to_json() const {
  auto render = [](std::int64_t micro) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(micro / 1000000),
                  static_cast<long long>(micro % 1000000));
    return std::string(buf);
  };
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [id, p] : this->models) {
    models[id] = {{"input", render(p.input_micro)}, {"output", render(p.output_micro)}};
  }
  return {{"models", std::move(models)}};
}

Money cost(std::span<const Transcript> transcripts, const PricingTable& pricing) {
  Money total;
  for (const auto& t : transcripts) {
    if (t.steps.empty()) continue;
    const auto& model_id = t.steps.back().model_id;
    auto it = pricing.models.find(model_id);
    if (it == pricing.models.end()) throw ValidationError("no price for model " + model_id);
    // tokens * (1e-6 currency per 1M tokens) = 1e-12 currency
    total += Money::from_pico(static_cast<std::int64_t>(t.tokens_in) * it->second.input_micro +
                              static_cast<std::int64_t>(t.tokens_out) * it->second.output_micro);
  }
  return total;
}

}  // namespace reroute
