#include <cmath>
#include <random>
#include <set>

#include "bacon/error.hpp"
#include "bacon/lsp_tree.hpp"
#include "doctest.h"
#include "expr_eval.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace bacon;

namespace {

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("f" + std::to_string(i + 1));
  return out;
}

LspTree random_tree(std::mt19937_64& rng, std::size_t n, double amin = -0.95, double amax = 1.95) {
  std::uniform_real_distribution<double> w(0.05, 0.95), a(amin, amax);
  std::vector<NodeParams> nodes;
  for (std::size_t i = 0; i + 1 < n; ++i) nodes.push_back({w(rng), a(rng)});
  return LspTree(names(n), nodes);
}

std::vector<double> random_sample(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

double eval_simplified(const SimplifiedNode& node, const LspTree& tree, const std::vector<double>& x) {
  return evaluate(node, [&](const std::string& f) {
    const auto& fs = tree.features();
    return x[static_cast<std::size_t>(std::find(fs.begin(), fs.end(), f) - fs.begin())];
  });
}

void collect_keys(const nlohmann::json& j, std::set<std::string>& keys) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      keys.insert(it.key());
      collect_keys(it.value(), keys);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_keys(v, keys);
  }
}

}  // namespace

TEST_CASE("tree construction invariants") {
  CHECK_THROWS_AS(LspTree({"a"}, {}), DomainError);
  CHECK_THROWS_AS(LspTree({"a", "b"}, {}), DomainError);
  CHECK_THROWS_AS(LspTree({"a", "b"}, {{0.5, 0.5}, {0.5, 0.5}}), DomainError);
  CHECK_THROWS_AS(LspTree({"a", "b"}, {{1.5, 0.5}}), DomainError);
  CHECK_THROWS_AS(LspTree({"a", "b"}, {{0.5, 2.5}}), DomainError);
  CHECK_NOTHROW(LspTree({"a", "b"}, {{0.5, 0.5}}));
}

TEST_CASE("tree layout") {
  CHECK(parse_tree_layout("left") == TreeLayout::left);
  CHECK_THROWS_AS(parse_tree_layout("balanced"), ConfigError);
  CHECK_THROWS_AS(parse_tree_layout("right"), ConfigError);
}

TEST_CASE("evaluate worked values") {
  const LspTree mean({"a", "b"}, {{0.5, 0.5}});
  CHECK(evaluate(mean, std::vector<double>{0.2, 0.6}) == doctest::Approx(0.4).epsilon(1e-15));

  const LspTree product({"a", "b", "c"}, {{0.5, 1.25}, {0.5, 1.25}});
  CHECK(std::abs(evaluate(product, std::vector<double>{0.9, 0.8, 0.5}) - 0.36) < 1e-12);

  const LspTree lead({"a", "b"}, {{1.0, 1.25}});
  CHECK(std::abs(evaluate(lead, std::vector<double>{0.7, 0.1}) - 0.49) < 1e-12);
  const double alpha = 1.6;
  const LspTree lead2({"a", "b"}, {{1.0, alpha}});
  CHECK(std::abs(evaluate(lead2, std::vector<double>{0.7, 0.1}) -
                 std::pow(0.7, 2.0 * (std::sqrt(3.0 / (2.0 - alpha)) - 1.0))) < 1e-12);

  CHECK_THROWS_AS(evaluate(mean, std::vector<double>{0.2}), ShapeError);
}

TEST_CASE("evaluate matches the reference fold") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 9;
    const LspTree tree = random_tree(rng, n);
    std::vector<double> w, a;
    for (const auto& node : tree.nodes()) {
      w.push_back(node.weight);
      a.push_back(node.andness);
    }
    const auto x = random_sample(rng, n);
    CHECK(std::abs(evaluate(tree, x) - oracle::chain(x, w, a)) < 1e-12);
  }
}

TEST_CASE("evaluate is monotone on conjunctive chains") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 6;
    const LspTree tree = random_tree(rng, n, 0.5, 1.95);
    auto x = random_sample(rng, n);
    const std::size_t i = rng() % n;
    const double before = evaluate(tree, x);
    x[i] = std::min(1.0, x[i] + 0.1 * u(rng));
    CHECK(evaluate(tree, x) >= before - 1e-15);
  }
}

TEST_CASE("prune") {
  std::mt19937_64 rng(3);
  const LspTree t = random_tree(rng, 5);
  CHECK(prune(t, 0) == t);
  const LspTree p3 = prune(t, 3);
  CHECK(p3.features() == std::vector<std::string>{"f4", "f5"});
  REQUIRE(p3.nodes().size() == 1);
  CHECK(p3.nodes()[0] == t.nodes().back());
  CHECK_THROWS_AS(prune(t, 4), DomainError);
  for (std::size_t k = 0; k <= 3; ++k) {
    for (std::size_t j = 0; k + j <= 3; ++j) CHECK(prune(prune(t, k), j) == prune(t, k + j));
  }
}

TEST_CASE("simplify without merging preserves semantics") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 8;
    const LspTree tree = random_tree(rng, n);
    const SimplifiedNode s = simplify(tree, false);
    for (int r = 0; r < 10; ++r) {
      const auto x = random_sample(rng, n);
      CHECK(std::abs(eval_simplified(s, tree, x) - evaluate(tree, x)) < 1e-12);
    }
  }
}

TEST_CASE("simplify merges same-code chains") {
  SUBCASE("uniform mean chain") {
    const LspTree tree(names(4), {{0.5, 0.5}, {0.6, 0.5}, {0.7, 0.5}});
    const SimplifiedNode s = simplify(tree, true);
    CHECK(s.op == AndnessCode::A);
    REQUIRE(s.children.size() == 4);
    double sum = 0.0;
    for (const auto& c : s.children) {
      CHECK(c.is_leaf());
      sum += c.weight;
    }
    CHECK(sum == doctest::Approx(1.0));
    // A merged chain of means is still exactly a weighted mean.
    const std::vector<double> x{0.1, 0.5, 0.3, 0.9};
    CHECK(std::abs(eval_simplified(s, tree, x) - evaluate(tree, x)) < 1e-12);
  }
  SUBCASE("disjunctive group under a hyper-conjunction") {
    const LspTree tree(names(4), {{0.5, 0.0}, {0.5, 0.0}, {0.5, 1.6}});
    const SimplifiedNode s = simplify(tree, true);
    CHECK(s.op == AndnessCode::HHC);
    REQUIRE(s.children.size() == 2);
    CHECK(s.children[0].op == AndnessCode::D);
    REQUIRE(s.children[0].children.size() == 3);
    CHECK(s.children[0].children[0].feature == "f1");
    CHECK(s.children[0].children[2].feature == "f3");
    CHECK(s.children[1].feature == "f4");
  }
  SUBCASE("alternating codes do not merge") {
    const LspTree tree(names(4), {{0.5, 1.0}, {0.5, 0.0}, {0.5, 1.0}});
    const SimplifiedNode merged = simplify(tree, true);
    const SimplifiedNode plain = simplify(tree, false);
    CHECK(structurally_equal(merged, plain));
    CHECK(merged.children.size() == 2);
  }
}

TEST_CASE("simplified JSON format") {
  const LspTree mean({"a", "b"}, {{0.5, 0.5}});
  const auto j = nlohmann::json::parse(to_json(simplify(mean, true)));
  const auto expected = nlohmann::json::parse(
      R"({"operator":"A","children":[{"feature":"a","weight":0.5},{"feature":"b","weight":0.5}]})");
  CHECK(j == expected);

  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const LspTree tree = random_tree(rng, 2 + rng() % 10);
    for (bool merge : {false, true}) {
      const SimplifiedNode s = simplify(tree, merge);
      const std::string text = to_json(s);
      const auto parsed = nlohmann::json::parse(text);
      std::set<std::string> keys;
      collect_keys(parsed, keys);
      for (const auto& k : keys) CHECK((k == "operator" || k == "children" || k == "feature" || k == "weight"));
      CHECK(structurally_equal(simplified_from_json(text), s));
    }
  }
  CHECK_THROWS_AS(simplified_from_json("{\"operator\": \"NOPE\", \"children\": []}"), ParseError);
  CHECK_THROWS_AS(simplified_from_json("not json"), ParseError);
}

TEST_CASE("to_expression") {
  CHECK(to_expression(LspTree({"a", "b"}, {{0.5, 0.5}})) == "0.5*x1 + 0.5*x2");
  CHECK(to_expression(LspTree({"a", "b"}, {{0.5, 1.25}})) == "x1*x2");

  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 9;
    const LspTree tree = random_tree(rng, n, -1.0, 2.0);
    const std::string text = to_expression(tree);
    for (int r = 0; r < 100; ++r) {
      const auto x = random_sample(rng, n);
      CHECK(std::abs(oracle::eval_expression(text, x) - evaluate(tree, x)) < 1e-9);
    }
  }
  // Drastic endpoints evaluate exactly on the corners.
  const LspTree drastic({"a", "b"}, {{0.5, 2.0}});
  const std::string d = to_expression(drastic);
  CHECK(oracle::eval_expression(d, {1.0, 1.0}) == 1.0);
  CHECK(oracle::eval_expression(d, {1.0, 0.99}) == 0.0);
  const LspTree drastic_or({"a", "b"}, {{0.5, -1.0}});
  const std::string o = to_expression(drastic_or);
  CHECK(oracle::eval_expression(o, {0.0, 0.0}) == 0.0);
  CHECK(oracle::eval_expression(o, {0.0, 0.01}) == 1.0);
}

TEST_CASE("report prompt") {
  const LspTree tree({"radius", "area", "texture"}, {{0.5, 1.6}, {0.4, -0.6}});
  const SimplifiedNode s = simplify(tree, true);
  const std::string json = to_json(s);
  const std::string prompt = emit_report_prompt(s, "Breast mass screening.");
  for (const char* section : {"System", "Context", "Background", "Instructions", "Input"}) {
    CHECK(prompt.find(section) != std::string::npos);
  }
  CHECK(prompt.find(json) != std::string::npos);
  CHECK(prompt.find("Breast mass screening.") != std::string::npos);
  CHECK(prompt.find(andness_table_markdown()) != std::string::npos);

  const std::string empty = emit_report_prompt(s, "");
  CHECK(empty.size() + std::string("Breast mass screening.").size() == prompt.size());

  // Renaming one feature changes the prompt only through the JSON payload.
  const LspTree renamed({"radius", "area_worst", "texture"}, tree.nodes());
  const SimplifiedNode s2 = simplify(renamed, true);
  const std::string p2 = emit_report_prompt(s2, "Breast mass screening.");
  CHECK(static_cast<long>(p2.size()) - static_cast<long>(prompt.size()) ==
        static_cast<long>(to_json(s2).size()) - static_cast<long>(json.size()));
}

TEST_CASE("andness table markdown lists every code") {
  const std::string md = andness_table_markdown();
  for (const auto& row : andness_table()) CHECK(md.find("| " + std::string(row.symbol) + " |") != std::string::npos);
}
