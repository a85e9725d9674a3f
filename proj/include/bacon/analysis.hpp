#pragma once

// Reports computed from a trained model: metrics, pruning attribution,
// threshold sweeps, Boolean equivalence and repeated-run statistics.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bacon/data.hpp"
#include "bacon/graded_logic.hpp"
#include "bacon/lsp_tree.hpp"
#include "bacon/training.hpp"
#include "json.hpp"

namespace bacon {

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;  // 1 when nothing is predicted positive (flagged)
  double recall = 0.0;     // 1 when there are no positive labels (flagged)
  bool precision_undefined = false;
  bool recall_undefined = false;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;

  std::size_t predicted_positive() const { return true_positive + false_positive; }
};

/// Prediction is score >= threshold. Throws DomainError on empty input and
/// ShapeError on a length mismatch.
Metrics metrics(std::span<const double> scores, std::span<const double> labels, double threshold);

struct AttributionRow {
  std::size_t pruned = 0;    // k
  std::size_t retained = 0;  // n - k
  std::string pruned_feature;  // feature removed at this step; empty for k = 0
  double accuracy = 0.0;
};

struct AttributionReport {
  std::vector<AttributionRow> rows;  // k = 0 .. n-2
  std::vector<std::string> ranking;  // most important first (top of the tree)
};

AttributionReport attribution(const TrainedModel& model, const Dataset& data, double threshold = 0.5);

/// Largest k whose accuracy is less than `max_drop` below the k = 0 row.
std::size_t max_prunable(const AttributionReport& report, double max_drop);

struct ThresholdRow {
  double threshold = 0.0;
  Metrics metrics;
};

struct ThresholdReport {
  std::vector<ThresholdRow> rows;  // strictly increasing thresholds
  std::size_t max_recall = 0;      // row indices of the scenario picks
  std::size_t max_accuracy = 0;
  std::size_t max_precision = 0;
};

/// Sweeps {0, step, 2 step, ..., 1}. Throws DomainError unless step is in (0, 0.5].
ThresholdReport threshold_sweep(std::span<const double> scores, std::span<const double> labels, double step);
ThresholdReport threshold_sweep(const TrainedModel& model, const Dataset& data, double step);

struct Mismatch {
  std::vector<bool> assignment;  // in expression variable order
  bool expected = false;
  double score = 0.0;
};

struct EquivalenceReport {
  bool equivalent = false;
  std::vector<Mismatch> mismatches;
  std::vector<AndnessCode> codes;  // one per node, bottom to top
};

/// Compares the thresholded tree with the expression on every 0/1 assignment.
/// Throws DomainError when the variable sets differ.
EquivalenceReport bool_equivalence(const LspTree& tree, const BoolExpr& expr, double threshold = 0.5);

struct RepeatConfig {
  int runs = 20;
  double test_fraction = 0.2;
  NormalizerKind normalizer = NormalizerKind::robust_sigmoid;
  std::vector<std::string> reversed_columns;
  std::size_t top_features = 5;
  TrainingConfig training;  // training.seed is the base seed; run r uses base + r
};

struct RunResult {
  int run = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<std::string> top_features;
  std::string error;
};

struct RepeatReport {
  std::vector<RunResult> runs;
  std::size_t failures = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Mean and normal-approximation 95% interval of the given accuracies.
void summarize(RepeatReport& report);

using Trainer = std::function<TrainedModel(const Dataset&, const TrainingConfig&)>;

/// Trains `runs` models on distinct seeded splits; the normalizer is fitted on
/// each training split. Failed runs are counted and excluded from the summary.
RepeatReport repeated_eval(const RawTable& table, const RepeatConfig& cfg, const Trainer& trainer = {});

nlohmann::ordered_json to_json(const Metrics& m);
nlohmann::ordered_json to_json(const AttributionReport& r);
nlohmann::ordered_json to_json(const ThresholdReport& r);
nlohmann::ordered_json to_json(const EquivalenceReport& r, const BoolExpr& expr);
nlohmann::ordered_json to_json(const RepeatReport& r);

std::string format_table(const AttributionReport& r);
std::string format_table(const ThresholdReport& r);
std::string format_table(const RepeatReport& r);

}  // namespace bacon
