#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reroute/confound.hpp"
#include "reroute/gateway.hpp"
#include "reroute/kernels.hpp"
#include "reroute/scorers.hpp"

namespace reroute {

enum class Split { train, calibration, eval };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct WorkloadQuery {
  std::string id;
  std::string text;
  std::optional<double> label;
  Split split = Split::eval;
  double difficulty = 0.0;
  std::string family;
};

struct Workload {
  std::string name;
  std::vector<WorkloadQuery> queries;

  [[nodiscard]] std::vector<const WorkloadQuery*> split(Split s) const;
  [[nodiscard]] std::vector<std::string> texts(Split s) const;
  [[nodiscard]] std::vector<std::string> all_texts() const;

  // ids unique; a query belongs to exactly one split by construction.
  void validate() const;

  [[nodiscard]] std::vector<nlohmann::json> to_jsonl() const;
  static Workload from_jsonl(std::string name, const std::vector<nlohmann::json>& rows);
};

// Latent difficulty = rare_weight * (rare slot fraction)
//                   + length_weight * (tokens - length_center) / length_scale
//                   + noise_sd * N(0, 1).
// Labels are assigned by difficulty terciles: lowest third 0, middle 0.5, top 1.
struct DifficultyModel {
  double rare_weight = 3.0;
  double length_weight = 0.25;
  double length_center = 12.0;
  double length_scale = 6.0;
  double noise_sd = 0.25;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t calibration = 0;  // the remainder goes to eval
};

// Templated synthetic queries. Each query draws a family template, a rare
// fraction r ~ U(0, 1) and 0-3 tail clauses; every content slot is filled with
// a rare technical word with probability r, otherwise with an everyday one.
Workload gen_workload(std::size_t size, std::uint64_t seed, const DifficultyModel& model = {},
                      SplitSizes splits = {}, std::string name = "synthetic");

// Fraction of (label 1, label 0) pairs that a scorer orders correctly.
double ordering_accuracy(std::span<const double> scores, std::span<const double> labels);

struct RateResult {
  std::size_t total = 0;
  std::size_t originally_weak = 0;
  std::size_t originally_strong = 0;
  std::size_t upgraded = 0;
  std::size_t downgraded = 0;
  std::optional<double> upgrade;    // percent; absent when nobody was weak
  std::optional<double> downgrade;  // percent; absent when nobody was strong
  double strong_before = 0.0;       // percent
  double strong_after = 0.0;
};

RateResult rates_from_scores(std::span<const double> before, std::span<const double> after,
                             double tau);

RateResult upgrade_rate(const RouterConfig& config, std::span<const TokenSeq> queries,
                        const TokenSeq& gadget, const Placement& placement,
                        kernels::Exec exec = {});

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample stddev / sqrt(count)
  std::size_t count = 0;
};

// Ignores absent values; count == 0 when every value is absent.
MeanSe mean_se(std::span<const std::optional<double>> values);
MeanSe mean_se(std::span<const double> values);

// Mean of the values <= cutoff (response perplexity outliers are dropped).
MeanSe mean_excluding_above(std::span<const double> values, double cutoff);

struct GadgetEntry {
  std::string id;
  std::vector<std::string> tokens;
  std::string scorer_fingerprint;  // empty for optimization-free baselines
  std::string origin = "optimized";
};

struct GadgetSet {
  std::string label;
  std::optional<std::string> surrogate;  // name of the scorer the set was optimized on
  std::vector<GadgetEntry> gadgets;
};

struct ExperimentInputs {
  std::string name = "experiment";
  std::map<std::string, std::shared_ptr<const Scorer>> scorers;
  std::map<std::string, double> tau;  // per scorer name
  std::vector<std::string> eval_texts;
  std::vector<std::string> targets;  // scorer names evaluated against; empty = all
  std::vector<GadgetSet> sets;
  Placement placement;  // instruction text is re-tokenized per target vocabulary
  std::string instruction_text;
  PricingTable pricing;
  std::string strong_id = "strong";
  std::string weak_id = "weak";
  BackendMap backends;  // defaults to "{input}" stubs
  kernels::Exec exec;
};

struct GadgetResult {
  std::string gadget_id;
  RateResult rates;
  Money cost_before;
  Money cost_after;
};

struct CellReport {
  std::string set_label;
  std::string surrogate;  // "" for baselines
  std::string target;
  bool white_box = false;
  std::vector<GadgetResult> gadgets;
  MeanSe upgrade;
  MeanSe downgrade;
  MeanSe strong_before;
  MeanSe strong_after;
  MeanSe cost_before;
  MeanSe cost_after;
};

struct EvalReport {
  std::string name;
  std::map<std::string, std::string> fingerprints;
  std::map<std::string, double> tau;
  std::vector<CellReport> cells;

  [[nodiscard]] const CellReport* cell(std::string_view set_label, std::string_view target) const;
  [[nodiscard]] nlohmann::json to_json() const;
  // One row per (cell, gadget).
  [[nodiscard]] std::string gadgets_csv() const;
  // One row per cell with mean and standard error columns.
  [[nodiscard]] std::string summary_csv() const;
};

// Evaluates every gadget set against every target. A set whose surrogate is
// named must contain only gadgets optimized on that scorer (fingerprint match),
// otherwise ValidationError.
EvalReport run_experiment(const ExperimentInputs& inputs);

// Histogram of two samples over shared equal-width bins:
// bin_lo,bin_hi,clean,attack rows.
std::string histogram_csv(std::span<const double> clean, std::span<const double> attack,
                          std::size_t bins = 30);

}  // namespace reroute
