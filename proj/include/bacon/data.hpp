#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace bacon {

/// Numeric table as read from CSV, before normalization.
struct RawTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::string source;

  std::size_t feature_count() const { return names.size(); }
  std::size_t row_count() const { return rows.size(); }
};

/// Normalized features in [0,1] with binary labels.
struct Dataset {
  std::vector<std::string> names;
  Eigen::MatrixXd features;  // rows x names.size()
  std::vector<double> labels;  // each 0 or 1
  std::string provenance;

  std::size_t feature_count() const { return names.size(); }
  std::size_t row_count() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t column_index(const std::string& name) const;  // throws DomainError
  /// Throws DomainError if a cell or label breaks the invariants. Training
  /// also accepts graded targets in [0,1] (binary_labels = false).
  void validate(bool binary_labels = true) const;
};

/// `label_column` names the label column when the file has a header, or gives
/// its zero-based index otherwise; empty means the last column.
RawTable load_csv(const std::filesystem::path& path, const std::string& label_column = "", bool has_header = true);
RawTable parse_csv(std::string_view text, const std::string& label_column = "", bool has_header = true,
                   const std::string& source = "<memory>");

/// Maps label == positive to 1 and everything else to 0 (one-vs-rest).
RawTable binarize_labels(RawTable table, double positive);

void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& label_name = "label");

enum class NormalizerKind { minmax, robust_sigmoid, none };

NormalizerKind parse_normalizer_kind(std::string_view text);
std::string_view normalizer_name(NormalizerKind kind);

struct ColumnStats {
  double a = 0.0;  // min, or median
  double b = 0.0;  // max, or IQR
  bool fallback_minmax = false;  // robust column with degenerate IQR
  bool constant = false;         // mapped to 0.5
};

struct NormalizerSpec {
  NormalizerKind kind = NormalizerKind::none;
  std::vector<std::string> names;
  std::vector<ColumnStats> stats;
  std::set<std::string> reversed_columns;
  std::vector<std::string> warnings;

  bool operator==(const NormalizerSpec& other) const;
};

NormalizerSpec fit_minmax(const RawTable& table);
/// z = 1 / (1 + exp(-(x - median) / (IQR / 2))); columns with zero IQR fall back to min-max.
NormalizerSpec fit_robust_sigmoid(const RawTable& table);
NormalizerSpec fit_identity(const RawTable& table);
NormalizerSpec fit_normalizer(const RawTable& table, NormalizerKind kind);

/// Applies scaling, clipping to [0,1], then reversal of the spec's reversed columns.
Dataset apply(const NormalizerSpec& spec, const RawTable& table);

/// x -> 1 - x on the named columns. Throws DomainError on an unknown column.
Dataset reverse_features(Dataset data, const std::vector<std::string>& columns);

nlohmann::json normalizer_to_json(const NormalizerSpec& spec);
NormalizerSpec normalizer_from_json(const nlohmann::json& j);

/// Fully parenthesized Boolean expression over named variables.
///   expr := term | term (AND term)+ | term (OR term)+
///   term := NOT term | '(' expr ')' | identifier
/// Operators: AND/and/&/∧, OR/or/|/∨, NOT/not/!/~/¬. Mixing AND and OR at
/// one level without parentheses is rejected.
class BoolExpr {
 public:
  static BoolExpr parse(std::string_view text);

  /// Variables in order of first appearance.
  const std::vector<std::string>& variables() const { return variables_; }

  /// values[i] is the truth of variables()[i].
  bool evaluate(const std::vector<bool>& values) const;

  std::string to_string() const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::vector<std::string> variables_;
};

/// Every assignment of the expression's k variables, repeated `repeats` times.
/// Variable i is bit (k-1-i) of the row's assignment index.
Dataset boolean_dataset(const BoolExpr& expr, std::size_t repeats);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified, seeded split. Each class contributes round(count * fraction)
/// rows to the test side. Throws DomainError for a class with fewer than 2 rows.
SplitIndices stratified_split(const std::vector<double>& labels, double test_fraction, std::uint64_t seed);

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);
std::pair<RawTable, RawTable> split(const RawTable& table, double test_fraction, std::uint64_t seed);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows);
RawTable subset(const RawTable& table, const std::vector<std::size_t>& rows);

}  // namespace bacon
