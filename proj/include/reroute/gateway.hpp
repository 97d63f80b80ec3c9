#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reroute/kernels.hpp"
#include "reroute/scorers.hpp"
#include "reroute/textcore.hpp"

namespace reroute {

enum class Decision { weak, strong };

std::string_view to_string(Decision d);

// omega = (scorer, threshold) plus the two model identifiers.
struct RouterConfig {
  std::shared_ptr<const Scorer> scorer;
  double tau = 0.5;
  std::string strong_id = "strong";
  std::string weak_id = "weak";

  void validate() const;
};

struct RouteResult {
  Decision decision = Decision::weak;
  double score = 0.0;
};

// Strong iff score >= tau.
constexpr Decision decide(double score, double tau) noexcept {
  return score >= tau ? Decision::strong : Decision::weak;
}

RouteResult route(const RouterConfig& config, const TokenSeq& query);

inline constexpr double kStrongForAll = -std::numeric_limits<double>::infinity();
inline constexpr double kCalibrationDelta = 1e-9;

// Smallest observed score tau with |{s >= tau}| / N <= epsilon. epsilon = 1
// yields -inf (everything strong); when no observed score qualifies, the
// result is max + 1e-9 (nothing strong).
double calibrate_scores(std::span<const double> scores, double epsilon);
double calibrate(const Scorer& scorer, std::span<const TokenSeq> queries, double epsilon,
                 kernels::Exec exec = {});

double strong_fraction(std::span<const double> scores, double tau);

// (sum of strong decisions) / q <= epsilon
bool policy_check(std::span<const Decision> decisions, double epsilon);

// Threshold values survive JSON as numbers, or the string "-inf".
nlohmann::json tau_to_json(double tau);
double tau_from_json(const nlohmann::json& j);

struct TranscriptStep {
  Decision model = Decision::weak;
  std::string model_id;
  std::string input;
};

struct Transcript {
  std::vector<TranscriptStep> steps;  // binary routers: exactly one step
  std::string user;
  std::uint64_t tokens_in = 0;
  std::uint64_t tokens_out = 0;
  double score = 0.0;
  std::string error;  // empty on success

  [[nodiscard]] nlohmann::json to_json() const;
  static Transcript from_json(const nlohmann::json& j);
};

// Stub: deterministic "{input}" template expansion. Http: POSTs
// {"model": id, "text": input} and reads "response" (or the raw body).
struct ModelBackend {
  enum class Kind { stub, http } kind = Kind::stub;
  std::string stub_template = "{input}";
  ExternalEndpoint endpoint;

  static ModelBackend stub(std::string tmpl) { return {Kind::stub, std::move(tmpl), {}}; }
  static ModelBackend http(ExternalEndpoint ep) { return {Kind::http, {}, std::move(ep)}; }
};

std::string invoke_backend(const ModelBackend& backend, std::string_view model_id,
                           std::string_view input);

using BackendMap = std::map<std::string, ModelBackend, std::less<>>;

struct Execution {
  Transcript transcript;
  std::string response;
};

// Thrown when the chosen backend fails; the transcript records the attempted
// decision and the error.
class BackendFailure : public std::runtime_error {
 public:
  BackendFailure(Transcript t, const std::string& what)
      : std::runtime_error(what), transcript_(std::move(t)) {}
  [[nodiscard]] const Transcript& transcript() const noexcept { return transcript_; }

 private:
  Transcript transcript_;
};

// Routes and invokes exactly one backend. `forced` overrides the decision
// (used by the workload monitor's force-weak action).
Execution execute(const RouterConfig& config, const BackendMap& backends, const TokenSeq& query,
                  std::string_view user = {}, std::optional<Decision> forced = std::nullopt);

// Money in units of 1e-12 currency, which is exact for integer token counts
// times prices given to 6 decimal places per million tokens.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_pico(std::int64_t pico) { return Money(pico); }

  [[nodiscard]] constexpr std::int64_t pico() const noexcept { return pico_; }
  // Rounded half away from zero to 6 decimal places.
  [[nodiscard]] std::int64_t micro() const noexcept;
  [[nodiscard]] double value() const noexcept { return static_cast<double>(pico_) * 1e-12; }
  [[nodiscard]] std::string to_string() const;

  constexpr Money operator+(Money o) const { return Money(pico_ + o.pico_); }
  constexpr Money& operator+=(Money o) {
    pico_ += o.pico_;
    return *this;
  }
  constexpr Money operator*(std::int64_t k) const { return Money(pico_ * k); }
  constexpr bool operator==(const Money&) const = default;

 private:
  constexpr explicit Money(std::int64_t pico) : pico_(pico) {}
  std::int64_t pico_ = 0;
};

struct Price {
  std::int64_t input_micro = 0;   // per 1M input tokens, in 1e-6 currency
  std::int64_t output_micro = 0;  // per 1M output tokens
};

// Parses "2.5" / 2.5 style prices into exact micro units; at most 6 decimals.
std::int64_t parse_price_micro(const nlohmann::json& value);

struct PricingTable {
  std::map<std::string, Price, std::less<>> models;

  // {"models": {"<id>": {"input": 2.5, "output": 10}}}
  static PricingTable from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

Money cost(std::span<const Transcript> transcripts, const PricingTable& pricing);

// Append-only JSONL sink; appends are serialized.
class TranscriptLog {
 public:
  explicit TranscriptLog(const std::filesystem::path& path);
  void append(const Transcript& t);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace reroute
