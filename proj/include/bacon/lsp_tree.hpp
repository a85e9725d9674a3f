#pragma once

// Left-associative LSP aggregation trees and their derived views.
//
//   z1 = gcd2(x1, x2; w1, a1)
//   zk = gcd2(z(k-1), x(k+1); wk, ak)
//
// features()[0] is the deepest leaf and features().back() the top-level
// newcomer. Node k aggregates the running result (weight wk) with feature k+1
// (weight 1 - wk).

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bacon/graded_logic.hpp"

namespace bacon {

struct NodeParams {
  double weight = 0.5;   // weight of the running (left) argument
  double andness = 0.5;

  bool operator==(const NodeParams&) const = default;
};

enum class TreeLayout { left, balanced };

/// Parses a tree_layout value. "balanced" is recognised but rejected with a
/// ConfigError since that layout has never been validated.
TreeLayout parse_tree_layout(std::string_view text);

class LspTree {
 public:
  /// Throws DomainError unless there are >= 2 features, exactly
  /// features.size() - 1 nodes, and every node parameter is in range.
  LspTree(std::vector<std::string> features, std::vector<NodeParams> nodes);

  const std::vector<std::string>& features() const { return features_; }
  const std::vector<NodeParams>& nodes() const { return nodes_; }
  std::size_t feature_count() const { return features_.size(); }

  bool operator==(const LspTree&) const = default;

 private:
  std::vector<std::string> features_;
  std::vector<NodeParams> nodes_;
};

/// Left fold of gcd2 over the sample, given in tree feature order.
double evaluate(const LspTree& tree, std::span<const double> sample);

/// Drops the k deepest features and their nodes; the two shallowest survivors
/// of the removed prefix become the new base pair.
LspTree prune(const LspTree& tree, std::size_t k);

/// Recursive explanation view. Leaves carry a feature; operator nodes carry a
/// code and children ordered deepest-first. `weight` is the node's share
/// within its parent (1 for the root). `andness` is the exact andness for
/// binary nodes or the mean andness of the merged chain nodes.
struct SimplifiedNode {
  std::string feature;
  AndnessCode op = AndnessCode::A;
  double andness = 0.5;
  double weight = 1.0;
  std::vector<SimplifiedNode> children;

  bool is_leaf() const { return children.empty(); }
};

/// Converts the chain into a recursive structure. With code_merge, adjacent
/// nodes mapping to the same AndnessCode collapse into one n-ary node whose
/// child weights are the products of chain weights along each attachment,
/// renormalized per node. That merged view is approximate; without merging
/// the result is a strict binary tree with identical semantics.
SimplifiedNode simplify(const LspTree& tree, bool code_merge);

/// Evaluates a simplified tree. N-ary nodes are folded left with the chain
/// weights reconstructed from cumulative child weights.
double evaluate(const SimplifiedNode& node, const std::function<double(const std::string&)>& lookup);

/// JSON with keys "operator", "children", "feature", "weight" only; leaf
/// weights are rounded to two decimals.
std::string to_json(const SimplifiedNode& node, int indent = 4);

/// Parses the JSON produced by to_json. Operator nodes get the representative
/// andness of their code and a weight of one minus their leaf siblings.
SimplifiedNode simplified_from_json(std::string_view text);

/// Compares operator codes, feature names and two-decimal leaf weights.
bool structurally_equal(const SimplifiedNode& a, const SimplifiedNode& b);

/// Closed-form arithmetic program over x1..xn (tree feature order). For more
/// than two features the text is a sequence of "zk = ...;" bindings whose last
/// segment is the result expression. Uses + - * pow() floor() and numeric
/// literals printed with 17 significant digits.
std::string to_expression(const LspTree& tree);

/// Report-generator prompt with the tree JSON inlined.
std::string emit_report_prompt(const SimplifiedNode& tree, std::string_view context);

/// The aggregator code table as a markdown table.
std::string andness_table_markdown();

}  // namespace bacon
