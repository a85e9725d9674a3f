#include "bacon/lsp_tree.hpp"

#include <cmath>
#include <cstdio>
#include "json.hpp"
#include <numeric>
#include <sstream>

#include "bacon/error.hpp"

namespace bacon {
namespace {

using ordered_json = nlohmann::ordered_json;

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0) return "(" + s + ")";
  return s;
}

std::string power(const std::string& base, double exponent) {
  if (exponent == 1.0) return base;
  return "pow(" + base + ", " + num(exponent) + ")";
}

// Conjunctive half of gcd2 as text; a and b are atoms (names or parenthesized).
std::string conjunctive_text(const std::string& a, const std::string& b, double w, double alpha) {
  if (alpha == 2.0) return "floor(" + a + ")*floor(" + b + ")";
  const std::string mean = num(w) + "*" + a + " + " + num(1.0 - w) + "*" + b;
  if (alpha == 0.5) return mean;
  const double e = std::sqrt(3.0 / (2.0 - alpha)) - 1.0;
  std::string geo = power(a, 2.0 * w) + "*" + power(b, 2.0 * (1.0 - w));
  if (e != 1.0) geo = "pow(" + geo + ", " + num(e) + ")";
  if (alpha >= 0.75) return geo;
  return num(3.0 - 4.0 * alpha) + "*(" + mean + ") + " + num(4.0 * alpha - 2.0) + "*(" + geo + ")";
}

std::string node_text(const std::string& a, const std::string& b, const NodeParams& node) {
  if (node.andness >= 0.5) return conjunctive_text(a, b, node.weight, node.andness);
  return "1 - (" + conjunctive_text("(1 - " + a + ")", "(1 - " + b + ")", node.weight, 1.0 - node.andness) + ")";
}

SimplifiedNode leaf(const std::string& feature, double weight) {
  SimplifiedNode n;
  n.feature = feature;
  n.weight = weight;
  return n;
}

ordered_json node_to_json(const SimplifiedNode& node) {
  ordered_json j;
  if (node.is_leaf()) {
    j["feature"] = node.feature;
    j["weight"] = round2(node.weight);
    return j;
  }
  j["operator"] = std::string(code_symbol(node.op));
  j["children"] = ordered_json::array();
  for (const auto& child : node.children) j["children"].push_back(node_to_json(child));
  return j;
}

SimplifiedNode node_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("tree node must be a JSON object");
  SimplifiedNode node;
  if (j.contains("feature")) {
    if (j.contains("operator") || j.contains("children")) {
      throw ParseError("tree node mixes leaf and operator keys");
    }
    node.feature = j.at("feature").get<std::string>();
    node.weight = j.value("weight", 1.0);
    return node;
  }
  if (!j.contains("operator") || !j.contains("children")) {
    throw ParseError("operator node requires \"operator\" and \"children\"");
  }
  const auto symbol = j.at("operator").get<std::string>();
  const auto code = code_from_symbol(symbol);
  if (!code) throw ParseError("unknown operator code '" + symbol + "'");
  node.op = *code;
  node.andness = code_andness(*code);
  const auto& kids = j.at("children");
  if (!kids.is_array() || kids.size() < 2) throw ParseError("operator node needs at least two children");
  double leaf_sum = 0.0;
  std::size_t operator_children = 0;
  for (const auto& k : kids) {
    node.children.push_back(node_from_json(k));
    if (node.children.back().is_leaf()) {
      leaf_sum += node.children.back().weight;
    } else {
      ++operator_children;
    }
  }
  for (auto& child : node.children) {
    if (!child.is_leaf()) child.weight = std::max(0.0, 1.0 - leaf_sum) / static_cast<double>(operator_children);
  }
  return node;
}

bool weights_match(double a, double b) { return std::abs(round2(a) - round2(b)) < 1e-9; }

std::string_view andness_label(AndnessCode code) {
  switch (code) {
    case AndnessCode::CC: return "2";
    case AndnessCode::HHC: return "[5/4, 2]";
    case AndnessCode::CP: return "5/4";
    case AndnessCode::LHC: return "[1, 5/4]";
    case AndnessCode::C: return "1";
    case AndnessCode::HCplus: return "13/14";
    case AndnessCode::HC: return "12/14";
    case AndnessCode::HCminus: return "11/14";
    case AndnessCode::SCplus: return "10/14";
    case AndnessCode::SC: return "9/14";
    case AndnessCode::SCminus: return "8/14";
    case AndnessCode::A: return "7/14";
    case AndnessCode::SDminus: return "6/14";
    case AndnessCode::SD: return "5/14";
    case AndnessCode::SDplus: return "4/14";
    case AndnessCode::HDminus: return "3/14";
    case AndnessCode::HD: return "2/14";
    case AndnessCode::HDplus: return "1/14";
    case AndnessCode::D: return "0";
    case AndnessCode::LHD: return "[-1/4, 0]";
    case AndnessCode::DP: return "-1/4";
    case AndnessCode::HHD: return "[-1, -1/4]";
    case AndnessCode::DD: return "-1";
  }
  return "?";
}

}  // namespace

TreeLayout parse_tree_layout(std::string_view text) {
  if (text == "left") return TreeLayout::left;
  if (text == "balanced") {
    throw ConfigError("tree_layout 'balanced' is recognised but untested; only 'left' is supported");
  }
  throw ConfigError("unknown tree_layout '" + std::string(text) + "' (expected 'left')");
}

LspTree::LspTree(std::vector<std::string> features, std::vector<NodeParams> nodes)
    : features_(std::move(features)), nodes_(std::move(nodes)) {
  if (features_.size() < 2) throw DomainError("an LSP tree needs at least two features");
  if (nodes_.size() + 1 != features_.size()) {
    throw DomainError("an LSP tree over " + std::to_string(features_.size()) + " features needs " +
                      std::to_string(features_.size() - 1) + " nodes, got " + std::to_string(nodes_.size()));
  }
  for (const auto& node : nodes_) {
    if (!(node.weight >= 0.0 && node.weight <= 1.0)) throw DomainError("node weight outside [0,1]");
    if (!(node.andness >= kAndnessMin && node.andness <= kAndnessMax)) {
      throw DomainError("node andness outside [-1,2]");
    }
  }
}

double evaluate(const LspTree& tree, std::span<const double> sample) {
  if (sample.size() != tree.feature_count()) {
    throw ShapeError("sample has " + std::to_string(sample.size()) + " values, tree has " +
                     std::to_string(tree.feature_count()) + " features");
  }
  double z = sample[0];
  const auto& nodes = tree.nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) z = gcd2(z, sample[k + 1], nodes[k].weight, nodes[k].andness);
  return z;
}

LspTree prune(const LspTree& tree, std::size_t k) {
  if (k + 2 > tree.feature_count()) {
    throw DomainError("cannot prune " + std::to_string(k) + " features from a tree of " +
                      std::to_string(tree.feature_count()));
  }
  const auto& f = tree.features();
  const auto& n = tree.nodes();
  return LspTree({f.begin() + static_cast<std::ptrdiff_t>(k), f.end()},
                 {n.begin() + static_cast<std::ptrdiff_t>(k), n.end()});
}

SimplifiedNode simplify(const LspTree& tree, bool code_merge) {
  const auto& f = tree.features();
  const auto& nodes = tree.nodes();

  SimplifiedNode current;
  current.op = andness_to_code(nodes[0].andness);
  current.andness = nodes[0].andness;
  current.children = {leaf(f[0], nodes[0].weight), leaf(f[1], 1.0 - nodes[0].weight)};
  std::size_t merged = 1;

  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const auto code = andness_to_code(nodes[k].andness);
    const double w = nodes[k].weight;
    if (code_merge && code == current.op) {
      for (auto& child : current.children) child.weight *= w;
      current.children.push_back(leaf(f[k + 1], 1.0 - w));
      current.andness = (current.andness * static_cast<double>(merged) + nodes[k].andness) /
                        static_cast<double>(merged + 1);
      ++merged;
      continue;
    }
    current.weight = w;
    SimplifiedNode parent;
    parent.op = code;
    parent.andness = nodes[k].andness;
    parent.children.push_back(std::move(current));
    parent.children.push_back(leaf(f[k + 1], 1.0 - w));
    current = std::move(parent);
    merged = 1;
  }
  current.weight = 1.0;

  if (code_merge) {
    // Chain products already sum to one; renormalize against rounding drift.
    std::function<void(SimplifiedNode&)> renormalize = [&](SimplifiedNode& node) {
      if (node.is_leaf()) return;
      double total = 0.0;
      for (const auto& c : node.children) total += c.weight;
      if (total > 0.0) {
        for (auto& c : node.children) c.weight /= total;
      }
      for (auto& c : node.children) renormalize(c);
    };
    renormalize(current);
  }
  return current;
}

double evaluate(const SimplifiedNode& node, const std::function<double(const std::string&)>& lookup) {
  if (node.is_leaf()) return lookup(node.feature);
  double z = evaluate(node.children[0], lookup);
  double cumulative = node.children[0].weight;
  for (std::size_t i = 1; i < node.children.size(); ++i) {
    const double next = cumulative + node.children[i].weight;
    const double w = next > 0.0 ? cumulative / next : 0.5;
    z = gcd2(z, evaluate(node.children[i], lookup), w, node.andness);
    cumulative = next;
  }
  return z;
}

std::string to_json(const SimplifiedNode& node, int indent) { return node_to_json(node).dump(indent); }

SimplifiedNode simplified_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed tree JSON: ") + e.what());
  }
  try {
    return node_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed tree JSON: ") + e.what());
  }
}

bool structurally_equal(const SimplifiedNode& a, const SimplifiedNode& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.feature == b.feature && weights_match(a.weight, b.weight);
  if (a.op != b.op || a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  }
  return true;
}

std::string to_expression(const LspTree& tree) {
  const auto& nodes = tree.nodes();
  std::ostringstream out;
  std::string running = "x1";
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::string text = node_text(running, "x" + std::to_string(k + 2), nodes[k]);
    if (k + 1 == nodes.size()) {
      out << text;
    } else {
      running = "z" + std::to_string(k + 1);
      out << running << " = " << text << "; ";
    }
  }
  return out.str();
}

std::string andness_table_markdown() {
  std::ostringstream md;
  md << "| GCD | Type | Subtype | Code | Name | Andness | Verbalization |\n";
  md << "|--------|--------|--------|--------|--------|--------|--------|\n";
  for (const auto& row : andness_table()) {
    md << "| GCD | " << row.type << " | " << row.subtype << " | " << row.symbol << " | " << row.name << " | "
       << andness_label(row.code) << " | \"" << row.verbalization << "\" |\n";
  }
  return md.str();
}

std::string emit_report_prompt(const SimplifiedNode& tree, std::string_view context) {
  std::ostringstream p;
  p << "System\n"
       "=======\n"
       "You are a report generator that produces a precise, human-readable,\n"
       "and insightful explanation of an LSP aggregation tree. Use your\n"
       "knowledge of LSP as well as the provided context to generate a\n"
       "clear and logical report.\n"
       "\n"
       "Context\n"
       "=======\n"
    << context
    << "\n"
       "\n"
       "Background\n"
       "==========\n"
       "LSP aggregators are defined in the following markdown table:\n"
    << andness_table_markdown()
    << "\n"
       "Instructions\n"
       "============\n"
       "1. Organize the report into the following sections:\n"
       "    - Overview: Summarize the overall decision logic of the tree.\n"
       "    - Decision Logic Walkthrough: Explain step by step from root\n"
       "    to leaves, introducing the operator, its meaning (use the\n"
       "    verbalization from the table where applicable), and how the\n"
       "    features are combined.\n"
       "    - Domain Interpretation: Relate the aggregation logic to\n"
       "    known patterns of the domain described in the context, and\n"
       "    highlight any interesting interactions or compensations observed.\n"
       "\n"
       "2. Use plain, human-friendly language suitable for domain experts or\n"
       "   decision-makers.\n"
       "\n"
       "3. When describing operators, use both their code (e.g., \"HHC\")\n"
       "    and verbalization (e.g., \"High Hyper-Conjunction - extremely\n"
       "    strict 'must have all' behavior\").\n"
       "\n"
       "4. Highlight the most influential features and explain how they\n"
       "   affect the overall decision.\n"
       "\n"
       "5. Avoid excessive technical terms unless necessary, and prefer\n"
       "   clear analogies and explanations.\n"
       "\n"
       "Input\n"
       "======\n"
       "The aggregation tree is expressed in the following JSON.\n"
       "```json\n"
    << to_json(tree)
    << "\n"
       "```\n";
  return p.str();
}

}  // namespace bacon
