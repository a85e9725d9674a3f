#include "bacon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace bacon {
namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double accuracy_of(const std::vector<double>& scores, const std::vector<double>& labels, double threshold) {
  return metrics(scores, labels, threshold).accuracy;
}

}  // namespace

Metrics metrics(std::span<const double> scores, std::span<const double> labels, double threshold) {
  if (scores.empty()) throw DomainError("metrics need at least one sample");
  if (scores.size() != labels.size()) {
    throw ShapeError("got " + std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) +
                     " labels");
  }
  Metrics m;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] > 0.5;
    if (predicted && actual) ++m.true_positive;
    else if (predicted) ++m.false_positive;
    else if (actual) ++m.false_negative;
    else ++m.true_negative;
  }
  const double total = static_cast<double>(scores.size());
  m.accuracy = static_cast<double>(m.true_positive + m.true_negative) / total;
  if (m.predicted_positive() == 0) {
    m.precision = 1.0;
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(m.true_positive) / static_cast<double>(m.predicted_positive());
  }
  const std::size_t actual_positive = m.true_positive + m.false_negative;
  if (actual_positive == 0) {
    m.recall = 1.0;
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(m.true_positive) / static_cast<double>(actual_positive);
  }
  return m;
}

AttributionReport attribution(const TrainedModel& model, const Dataset& data, double threshold) {
  const auto& features = model.tree.features();
  const std::size_t n = features.size();
  AttributionReport report;
  for (std::size_t k = 0; k + 2 <= n; ++k) {
    const LspTree pruned = prune(model.tree, k);
    AttributionRow row;
    row.pruned = k;
    row.retained = n - k;
    if (k > 0) row.pruned_feature = features[k - 1];
    row.accuracy = accuracy_of(tree_scores(pruned, data), data.labels, threshold);
    report.rows.push_back(std::move(row));
  }
  report.ranking.assign(features.rbegin(), features.rend());
  return report;
}

std::size_t max_prunable(const AttributionReport& report, double max_drop) {
  if (report.rows.empty()) return 0;
  const double base = report.rows.front().accuracy;
  std::size_t best = 0;
  for (const auto& row : report.rows) {
    if (base - row.accuracy < max_drop) best = std::max(best, row.pruned);
  }
  return best;
}

ThresholdReport threshold_sweep(std::span<const double> scores, std::span<const double> labels, double step) {
  if (!(step > 0.0 && step <= 0.5)) throw DomainError("threshold step must lie in (0, 0.5]");
  ThresholdReport report;
  const auto count = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
  // i / count is the closest double to the decimal grid point, i * step is not.
  const bool even = std::abs(static_cast<double>(count) * step - 1.0) < 1e-9;
  for (std::size_t i = 0; i <= count; ++i) {
    const double t = even ? static_cast<double>(i) / static_cast<double>(count)
                          : std::min(1.0, static_cast<double>(i) * step);
    if (!report.rows.empty() && t <= report.rows.back().threshold) continue;
    report.rows.push_back({t, metrics(scores, labels, t)});
  }
  if (report.rows.back().threshold < 1.0) report.rows.push_back({1.0, metrics(scores, labels, 1.0)});

  const auto& rows = report.rows;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].metrics.recall > rows[report.max_recall].metrics.recall) report.max_recall = i;
    if (rows[i].metrics.accuracy > rows[report.max_accuracy].metrics.accuracy) report.max_accuracy = i;
  }
  std::optional<std::size_t> precision_pick;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].metrics.predicted_positive() == 0) continue;
    if (!precision_pick || rows[i].metrics.precision >= rows[*precision_pick].metrics.precision) precision_pick = i;
  }
  // With no positive prediction anywhere, fall back to the top threshold.
  report.max_precision = precision_pick.value_or(rows.size() - 1);
  return report;
}

ThresholdReport threshold_sweep(const TrainedModel& model, const Dataset& data, double step) {
  const std::vector<double> scores = model.scores(data);
  return threshold_sweep(scores, data.labels, step);
}

EquivalenceReport bool_equivalence(const LspTree& tree, const BoolExpr& expr, double threshold) {
  const auto& vars = expr.variables();
  const auto& features = tree.features();
  const std::set<std::string> var_set(vars.begin(), vars.end());
  const std::set<std::string> feature_set(features.begin(), features.end());
  if (var_set != feature_set || features.size() != vars.size()) {
    throw DomainError("tree features and expression variables differ");
  }
  std::vector<std::size_t> var_of_feature;
  for (const auto& f : features) {
    var_of_feature.push_back(static_cast<std::size_t>(std::find(vars.begin(), vars.end(), f) - vars.begin()));
  }

  EquivalenceReport report;
  const std::size_t k = vars.size();
  std::vector<bool> assignment(k);
  std::vector<double> sample(k);
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << k); ++a) {
    for (std::size_t i = 0; i < k; ++i) assignment[i] = ((a >> (k - 1 - i)) & 1U) != 0;
    for (std::size_t j = 0; j < k; ++j) sample[j] = assignment[var_of_feature[j]] ? 1.0 : 0.0;
    const bool expected = expr.evaluate(assignment);
    const double score = evaluate(tree, sample);
    if ((score >= threshold) != expected) report.mismatches.push_back({assignment, expected, score});
  }
  report.equivalent = report.mismatches.empty();
  for (const auto& node : tree.nodes()) report.codes.push_back(andness_to_code(node.andness));
  return report;
}

void summarize(RepeatReport& report) {
  std::vector<double> acc;
  report.failures = 0;
  for (const auto& run : report.runs) {
    if (run.converged) acc.push_back(run.test_accuracy);
    else ++report.failures;
  }
  report.mean = report.stddev = report.ci_low = report.ci_high = 0.0;
  if (acc.empty()) return;
  double sum = 0.0;
  for (double a : acc) sum += a;
  report.mean = sum / static_cast<double>(acc.size());
  if (acc.size() > 1) {
    double ss = 0.0;
    for (double a : acc) ss += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(ss / static_cast<double>(acc.size() - 1));
  }
  const double half = 1.96 * report.stddev / std::sqrt(static_cast<double>(acc.size()));
  report.ci_low = report.mean - half;
  report.ci_high = report.mean + half;
}

RepeatReport repeated_eval(const RawTable& table, const RepeatConfig& cfg, const Trainer& trainer) {
  if (cfg.runs < 2) throw ConfigError("repeated evaluation needs at least two runs");
  const Trainer run_training = trainer ? trainer : Trainer([](const Dataset& d, const TrainingConfig& c) {
    return train(d, c);
  });
  RepeatReport report;
  for (int r = 0; r < cfg.runs; ++r) {
    RunResult result;
    result.run = r;
    result.seed = cfg.training.seed + static_cast<std::uint64_t>(r);
    auto [train_raw, test_raw] = split(table, cfg.test_fraction, result.seed);
    NormalizerSpec spec = fit_normalizer(train_raw, cfg.normalizer);
    spec.reversed_columns.insert(cfg.reversed_columns.begin(), cfg.reversed_columns.end());
    const Dataset train_data = apply(spec, train_raw);
    const Dataset test_data = apply(spec, test_raw);
    TrainingConfig tc = cfg.training;
    tc.seed = result.seed;
    try {
      const TrainedModel model = run_training(train_data, tc);
      result.converged = true;
      result.train_accuracy = metrics(model.scores(train_data), train_data.labels, tc.decision_threshold).accuracy;
      result.test_accuracy = metrics(model.scores(test_data), test_data.labels, tc.decision_threshold).accuracy;
      const auto& f = model.tree.features();
      for (std::size_t i = 0; i < std::min(cfg.top_features, f.size()); ++i) result.top_features.push_back(f[f.size() - 1 - i]);
    } catch (const ConvergenceError& e) {
      result.error = e.what();
    }
    report.runs.push_back(std::move(result));
  }
  summarize(report);
  return report;
}

nlohmann::ordered_json to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"precision_undefined", m.precision_undefined},
          {"recall_undefined", m.recall_undefined},
          {"true_positive", m.true_positive},
          {"false_positive", m.false_positive},
          {"true_negative", m.true_negative},
          {"false_negative", m.false_negative}};
}

nlohmann::ordered_json to_json(const AttributionReport& r) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"pruned", row.pruned},
                    {"retained", row.retained},
                    {"pruned_feature", row.pruned_feature.empty() ? nlohmann::ordered_json(nullptr)
                                                                  : nlohmann::ordered_json(row.pruned_feature)},
                    {"accuracy", row.accuracy}});
  }
  return {{"rows", std::move(rows)}, {"ranking", r.ranking}};
}

nlohmann::ordered_json to_json(const ThresholdReport& r) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"threshold", row.threshold},
                    {"accuracy", row.metrics.accuracy},
                    {"precision", row.metrics.precision},
                    {"recall", row.metrics.recall},
                    {"predicted_positive", row.metrics.predicted_positive()}});
  }
  auto pick = [&](std::size_t i) {
    const auto& row = r.rows[i];
    return nlohmann::ordered_json{{"threshold", row.threshold},
                                  {"accuracy", row.metrics.accuracy},
                                  {"precision", row.metrics.precision},
                                  {"recall", row.metrics.recall}};
  };
  return {{"rows", std::move(rows)},
          {"picks",
           {{"max_recall", pick(r.max_recall)},
            {"max_accuracy", pick(r.max_accuracy)},
            {"max_precision", pick(r.max_precision)}}}};
}

nlohmann::ordered_json to_json(const EquivalenceReport& r, const BoolExpr& expr) {
  auto codes = nlohmann::ordered_json::array();
  for (AndnessCode c : r.codes) codes.push_back(std::string(code_symbol(c)));
  auto mismatches = nlohmann::ordered_json::array();
  for (const auto& m : r.mismatches) {
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < m.assignment.size(); ++i) values[expr.variables()[i]] = m.assignment[i] ? 1 : 0;
    mismatches.push_back({{"assignment", std::move(values)}, {"expected", m.expected}, {"score", m.score}});
  }
  return {{"expression", expr.to_string()},
          {"equivalent", r.equivalent},
          {"codes", std::move(codes)},
          {"mismatches", std::move(mismatches)}};
}

nlohmann::ordered_json to_json(const RepeatReport& r) {
  auto runs = nlohmann::ordered_json::array();
  for (const auto& run : r.runs) {
    nlohmann::ordered_json j = {{"run", run.run}, {"seed", run.seed}, {"converged", run.converged}};
    if (run.converged) {
      j["train_accuracy"] = run.train_accuracy;
      j["accuracy"] = run.test_accuracy;
      j["top_features"] = run.top_features;
    } else {
      j["error"] = run.error;
    }
    runs.push_back(std::move(j));
  }
  return {{"runs", std::move(runs)},
          {"failures", r.failures},
          {"mean_accuracy", r.mean},
          {"stddev", r.stddev},
          {"ci95", {r.ci_low, r.ci_high}}};
}

std::string format_table(const AttributionReport& r) {
  std::ostringstream out;
  out << "pruned  retained  accuracy  pruned_feature\n";
  for (const auto& row : r.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%6zu  %8zu  %8s  ", row.pruned, row.retained, fixed(row.accuracy).c_str());
    out << buf << (row.pruned_feature.empty() ? "-" : row.pruned_feature) << '\n';
  }
  out << "ranking:";
  for (const auto& f : r.ranking) out << ' ' << f;
  out << '\n';
  return out.str();
}

std::string format_table(const ThresholdReport& r) {
  std::ostringstream out;
  out << "threshold  accuracy  precision  recall\n";
  for (const auto& row : r.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%9s  %8s  %9s  %6s\n", fixed(row.threshold, 3).c_str(),
                  fixed(row.metrics.accuracy).c_str(), fixed(row.metrics.precision).c_str(),
                  fixed(row.metrics.recall).c_str());
    out << buf;
  }
  auto line = [&](const char* name, std::size_t i) {
    const auto& row = r.rows[i];
    out << name << ": threshold " << fixed(row.threshold, 3) << " accuracy " << fixed(row.metrics.accuracy)
        << " precision " << fixed(row.metrics.precision) << " recall " << fixed(row.metrics.recall) << '\n';
  };
  line("max recall", r.max_recall);
  line("max accuracy", r.max_accuracy);
  line("max precision", r.max_precision);
  return out.str();
}

std::string format_table(const RepeatReport& r) {
  std::ostringstream out;
  out << "run  seed  accuracy  top features\n";
  for (const auto& run : r.runs) {
    out << run.run << "  " << run.seed << "  ";
    if (run.converged) {
      out << fixed(run.test_accuracy);
      for (const auto& f : run.top_features) out << ' ' << f;
    } else {
      out << "failed: " << run.error;
    }
    out << '\n';
  }
  out << "mean " << fixed(r.mean) << " 95% CI [" << fixed(r.ci_low) << ", " << fixed(r.ci_high) << "] failures "
      << r.failures << '\n';
  return out.str();
}

}  // namespace bacon
