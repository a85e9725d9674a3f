#include "bacon/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "bacon/error.hpp"
#include "bacon/rng.hpp"

namespace bacon {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool parse_number(const std::string& text, double& value) {
  if (text.empty()) return false;
  char* end = nullptr;
  value = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(value);
}

double quantile(std::vector<double> sorted, double q) {
  // Linear interpolation between closest ranks.
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> column(const RawTable& table, std::size_t j) {
  std::vector<double> c;
  c.reserve(table.rows.size());
  for (const auto& row : table.rows) c.push_back(row[j]);
  return c;
}

void require_rows(const RawTable& table) {
  if (table.rows.empty()) throw DomainError("cannot fit a normalizer on an empty table");
}

ColumnStats minmax_stats(const std::vector<double>& c) {
  const auto [mn, mx] = std::minmax_element(c.begin(), c.end());
  ColumnStats s;
  s.a = *mn;
  s.b = *mx;
  s.constant = (*mn == *mx);
  return s;
}

double scale_minmax(const ColumnStats& s, double x) {
  if (s.constant) return 0.5;
  return std::clamp((x - s.a) / (s.b - s.a), 0.0, 1.0);
}

}  // namespace

std::size_t Dataset::column_index(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DomainError("unknown column '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void Dataset::validate(bool binary_labels) const {
  if (static_cast<std::size_t>(features.cols()) != names.size()) {
    throw DomainError("dataset column count does not match its names");
  }
  if (labels.size() != row_count()) throw DomainError("dataset label count does not match its rows");
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      const double v = features(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("dataset cell outside [0,1]");
    }
  }
  for (double y : labels) {
    if (binary_labels && y != 0.0 && y != 1.0) throw DomainError("dataset labels must be 0 or 1");
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError("dataset targets must lie in [0,1]");
  }
}

RawTable parse_csv(std::string_view text, const std::string& label_column, bool has_header, const std::string& source) {
  RawTable table;
  table.source = source;
  std::vector<std::vector<std::string>> lines;
  std::vector<std::size_t> line_numbers;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    const auto line = text.substr(pos, nl - pos);
    if (!trim(line).empty()) {
      lines.push_back(split_fields(line));
      line_numbers.push_back(line_no);
    }
    pos = nl + 1;
  }
  if (lines.empty()) throw ParseError(source + ": empty file");

  std::vector<std::string> header;
  std::size_t first = 0;
  const std::size_t width = lines[0].size();
  if (width < 2) throw ParseError(source + ": need at least one feature column and a label column");
  if (has_header) {
    header = lines[0];
    first = 1;
  } else {
    for (std::size_t j = 0; j < width; ++j) header.push_back("f" + std::to_string(j + 1));
  }

  std::size_t label_idx = width - 1;
  if (!label_column.empty()) {
    if (has_header) {
      const auto it = std::find(header.begin(), header.end(), label_column);
      if (it == header.end()) throw ParseError(source + ": unknown label column '" + label_column + "'");
      label_idx = static_cast<std::size_t>(it - header.begin());
    } else {
      double idx = 0;
      if (!parse_number(label_column, idx) || idx < 0 || idx >= static_cast<double>(width) || idx != std::floor(idx)) {
        throw ParseError(source + ": unknown label column '" + label_column + "'");
      }
      label_idx = static_cast<std::size_t>(idx);
    }
  }
  for (std::size_t j = 0; j < width; ++j) {
    if (j != label_idx) table.names.push_back(header[j]);
  }

  for (std::size_t r = first; r < lines.size(); ++r) {
    const auto& fields = lines[r];
    const auto where = source + ":" + std::to_string(line_numbers[r]);
    if (fields.size() != width) {
      throw ParseError(where + ": expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(width - 1);
    double label = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      double v = 0.0;
      if (!parse_number(fields[j], v)) {
        throw ParseError(where + ": non-numeric value '" + fields[j] + "' in column '" + header[j] + "'");
      }
      if (j == label_idx) {
        label = v;
      } else {
        row.push_back(v);
      }
    }
    table.rows.push_back(std::move(row));
    table.labels.push_back(label);
  }
  if (table.rows.empty()) throw ParseError(source + ": no data rows (empty dataset)");
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), label_column, has_header, path.string());
}

RawTable binarize_labels(RawTable table, double positive) {
  for (double& y : table.labels) y = (y == positive) ? 1.0 : 0.0;
  return table;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& label_name) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  for (const auto& n : data.names) out << n << ',';
  out << label_name << '\n';
  char buf[40];
  for (std::size_t i = 0; i < data.row_count(); ++i) {
    for (std::size_t j = 0; j < data.feature_count(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << buf << ',';
    }
    out << static_cast<int>(data.labels[i]) << '\n';
  }
}

NormalizerKind parse_normalizer_kind(std::string_view text) {
  if (text == "minmax") return NormalizerKind::minmax;
  if (text == "robust_sigmoid" || text == "sigmoid") return NormalizerKind::robust_sigmoid;
  if (text == "none") return NormalizerKind::none;
  throw ConfigError("unknown normalizer '" + std::string(text) + "' (minmax, robust_sigmoid, none)");
}

std::string_view normalizer_name(NormalizerKind kind) {
  switch (kind) {
    case NormalizerKind::minmax: return "minmax";
    case NormalizerKind::robust_sigmoid: return "robust_sigmoid";
    case NormalizerKind::none: return "none";
  }
  return "none";
}

bool NormalizerSpec::operator==(const NormalizerSpec& o) const {
  if (kind != o.kind || names != o.names || reversed_columns != o.reversed_columns || stats.size() != o.stats.size()) {
    return false;
  }
  for (std::size_t j = 0; j < stats.size(); ++j) {
    const auto& a = stats[j];
    const auto& b = o.stats[j];
    if (a.a != b.a || a.b != b.b || a.fallback_minmax != b.fallback_minmax || a.constant != b.constant) return false;
  }
  return true;
}

NormalizerSpec fit_minmax(const RawTable& table) {
  require_rows(table);
  NormalizerSpec spec;
  spec.kind = NormalizerKind::minmax;
  spec.names = table.names;
  for (std::size_t j = 0; j < table.feature_count(); ++j) {
    spec.stats.push_back(minmax_stats(column(table, j)));
    if (spec.stats.back().constant) {
      spec.warnings.push_back("column '" + table.names[j] + "' is constant; mapped to 0.5");
    }
  }
  return spec;
}

NormalizerSpec fit_robust_sigmoid(const RawTable& table) {
  require_rows(table);
  NormalizerSpec spec;
  spec.kind = NormalizerKind::robust_sigmoid;
  spec.names = table.names;
  for (std::size_t j = 0; j < table.feature_count(); ++j) {
    auto c = column(table, j);
    std::sort(c.begin(), c.end());
    ColumnStats s;
    s.a = quantile(c, 0.5);
    s.b = quantile(c, 0.75) - quantile(c, 0.25);
    if (!(s.b > 0.0)) {
      s = minmax_stats(c);
      s.fallback_minmax = true;
      spec.warnings.push_back("column '" + table.names[j] + "' has zero IQR; using min-max scaling");
      if (s.constant) spec.warnings.push_back("column '" + table.names[j] + "' is constant; mapped to 0.5");
    }
    spec.stats.push_back(s);
  }
  return spec;
}

NormalizerSpec fit_identity(const RawTable& table) {
  NormalizerSpec spec;
  spec.kind = NormalizerKind::none;
  spec.names = table.names;
  spec.stats.resize(table.feature_count());
  return spec;
}

NormalizerSpec fit_normalizer(const RawTable& table, NormalizerKind kind) {
  switch (kind) {
    case NormalizerKind::minmax: return fit_minmax(table);
    case NormalizerKind::robust_sigmoid: return fit_robust_sigmoid(table);
    case NormalizerKind::none: return fit_identity(table);
  }
  return fit_identity(table);
}

Dataset apply(const NormalizerSpec& spec, const RawTable& table) {
  if (spec.names != table.names) throw ShapeError("normalizer columns do not match the table columns");
  Dataset out;
  out.names = table.names;
  out.provenance = table.source + " [" + std::string(normalizer_name(spec.kind)) + "]";
  const auto rows = static_cast<Eigen::Index>(table.row_count());
  const auto cols = static_cast<Eigen::Index>(table.feature_count());
  out.features.resize(rows, cols);
  std::vector<bool> reversed(table.feature_count(), false);
  for (std::size_t j = 0; j < table.feature_count(); ++j) reversed[j] = spec.reversed_columns.count(table.names[j]) > 0;

  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    if (row.size() != table.feature_count()) throw ShapeError("ragged table row");
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& s = spec.stats[static_cast<std::size_t>(j)];
      const double x = row[static_cast<std::size_t>(j)];
      double z = 0.0;
      switch (spec.kind) {
        case NormalizerKind::minmax: z = scale_minmax(s, x); break;
        case NormalizerKind::robust_sigmoid:
          z = s.fallback_minmax ? scale_minmax(s, x) : 1.0 / (1.0 + std::exp(-(x - s.a) / (0.5 * s.b)));
          break;
        case NormalizerKind::none:
          if (!(x >= 0.0 && x <= 1.0)) {
            throw DomainError("value " + std::to_string(x) + " in column '" + table.names[static_cast<std::size_t>(j)] +
                              "' is outside [0,1]; choose a normalizer");
          }
          z = x;
          break;
      }
      out.features(i, j) = reversed[static_cast<std::size_t>(j)] ? 1.0 - z : z;
    }
  }
  for (double y : table.labels) {
    if (y != 0.0 && y != 1.0) throw DomainError("labels must be 0 or 1 (binarize multi-class labels first)");
  }
  out.labels = table.labels;
  return out;
}

Dataset reverse_features(Dataset data, const std::vector<std::string>& columns) {
  for (const auto& name : columns) {
    const auto j = static_cast<Eigen::Index>(data.column_index(name));
    data.features.col(j) = (1.0 - data.features.col(j).array()).matrix();
  }
  return data;
}

nlohmann::json normalizer_to_json(const NormalizerSpec& spec) {
  nlohmann::json j;
  j["kind"] = normalizer_name(spec.kind);
  j["names"] = spec.names;
  j["reversed_columns"] = spec.reversed_columns;
  auto& stats = j["stats"] = nlohmann::json::array();
  for (const auto& s : spec.stats) {
    stats.push_back({{"a", s.a}, {"b", s.b}, {"fallback_minmax", s.fallback_minmax}, {"constant", s.constant}});
  }
  return j;
}

NormalizerSpec normalizer_from_json(const nlohmann::json& j) {
  NormalizerSpec spec;
  spec.kind = parse_normalizer_kind(j.at("kind").get<std::string>());
  spec.names = j.at("names").get<std::vector<std::string>>();
  spec.reversed_columns = j.at("reversed_columns").get<std::set<std::string>>();
  for (const auto& s : j.at("stats")) {
    spec.stats.push_back({s.at("a").get<double>(), s.at("b").get<double>(), s.at("fallback_minmax").get<bool>(),
                          s.at("constant").get<bool>()});
  }
  if (spec.stats.size() != spec.names.size()) throw ParseError("normalizer stats do not match its columns");
  return spec;
}

// --- Boolean expressions -------------------------------------------------

struct BoolExpr::Node {
  enum class Kind { var, not_, and_, or_ } kind = Kind::var;
  std::size_t var = 0;
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

enum class Tok { ident, and_, or_, not_, lparen, rparen, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto lower = [](std::string w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return w;
  };
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    const std::size_t at = i;
    if (c == '(') { out.push_back({Tok::lparen, "(", at}); ++i; continue; }
    if (c == ')') { out.push_back({Tok::rparen, ")", at}); ++i; continue; }
    if (c == '&') { out.push_back({Tok::and_, "&", at}); ++i; continue; }
    if (c == '|') { out.push_back({Tok::or_, "|", at}); ++i; continue; }
    if (c == '!' || c == '~') { out.push_back({Tok::not_, "!", at}); ++i; continue; }
    if (s.substr(i, 3) == "\xE2\x88\xA7") { out.push_back({Tok::and_, "∧", at}); i += 3; continue; }
    if (s.substr(i, 3) == "\xE2\x88\xA8") { out.push_back({Tok::or_, "∨", at}); i += 3; continue; }
    if (s.substr(i, 2) == "\xC2\xAC") { out.push_back({Tok::not_, "¬", at}); i += 2; continue; }
    if (std::isalpha(c) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      const std::string word(s.substr(i, j - i));
      const std::string lw = lower(word);
      if (lw == "and") out.push_back({Tok::and_, word, at});
      else if (lw == "or") out.push_back({Tok::or_, word, at});
      else if (lw == "not") out.push_back({Tok::not_, word, at});
      else out.push_back({Tok::ident, word, at});
      i = j;
      continue;
    }
    throw ParseError("unexpected character '" + std::string(1, s[i]) + "' at offset " + std::to_string(i));
  }
  out.push_back({Tok::end, "", s.size()});
  return out;
}

class BoolParser {
 public:
  explicit BoolParser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  std::shared_ptr<const BoolExpr::Node> parse_all() {
    auto node = expr();
    if (peek().kind != Tok::end) fail("unexpected '" + peek().text + "'");
    return node;
  }

  std::vector<std::string> variables;

 private:
  using NodePtr = std::shared_ptr<const BoolExpr::Node>;
  using Kind = BoolExpr::Node::Kind;

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("boolean expression: " + msg + " at offset " + std::to_string(peek().offset));
  }

  NodePtr expr() {
    NodePtr first = term();
    const Tok op = peek().kind;
    if (op != Tok::and_ && op != Tok::or_) return first;
    auto node = std::make_shared<BoolExpr::Node>();
    node->kind = op == Tok::and_ ? Kind::and_ : Kind::or_;
    node->children.push_back(first);
    while (peek().kind == Tok::and_ || peek().kind == Tok::or_) {
      if (peek().kind != op) fail("mixed AND/OR without parentheses");
      next();
      node->children.push_back(term());
    }
    return node;
  }

  NodePtr term() {
    const Token& t = peek();
    if (t.kind == Tok::not_) {
      next();
      auto node = std::make_shared<BoolExpr::Node>();
      node->kind = Kind::not_;
      node->children.push_back(term());
      return node;
    }
    if (t.kind == Tok::lparen) {
      next();
      NodePtr inner = expr();
      if (peek().kind != Tok::rparen) fail("expected ')'");
      next();
      return inner;
    }
    if (t.kind == Tok::ident) {
      next();
      auto node = std::make_shared<BoolExpr::Node>();
      node->kind = Kind::var;
      const auto it = std::find(variables.begin(), variables.end(), t.text);
      node->var = static_cast<std::size_t>(it - variables.begin());
      if (it == variables.end()) variables.push_back(t.text);
      return node;
    }
    fail(t.kind == Tok::end ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

bool eval_node(const BoolExpr::Node& n, const std::vector<bool>& values) {
  using Kind = BoolExpr::Node::Kind;
  switch (n.kind) {
    case Kind::var: return values[n.var];
    case Kind::not_: return !eval_node(*n.children[0], values);
    case Kind::and_:
      for (const auto& c : n.children) {
        if (!eval_node(*c, values)) return false;
      }
      return true;
    case Kind::or_:
      for (const auto& c : n.children) {
        if (eval_node(*c, values)) return true;
      }
      return false;
  }
  return false;
}

std::string node_string(const BoolExpr::Node& n, const std::vector<std::string>& vars) {
  using Kind = BoolExpr::Node::Kind;
  switch (n.kind) {
    case Kind::var: return vars[n.var];
    case Kind::not_: return "NOT " + node_string(*n.children[0], vars);
    case Kind::and_:
    case Kind::or_: {
      std::string s = "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) s += n.kind == Kind::and_ ? " AND " : " OR ";
        s += node_string(*n.children[i], vars);
      }
      return s + ")";
    }
  }
  return {};
}

}  // namespace

BoolExpr BoolExpr::parse(std::string_view text) {
  BoolParser parser(tokenize(text));
  BoolExpr e;
  e.root_ = parser.parse_all();
  e.variables_ = std::move(parser.variables);
  return e;
}

bool BoolExpr::evaluate(const std::vector<bool>& values) const {
  if (values.size() != variables_.size()) throw ShapeError("boolean assignment size does not match variable count");
  return eval_node(*root_, values);
}

std::string BoolExpr::to_string() const { return node_string(*root_, variables_); }

Dataset boolean_dataset(const BoolExpr& expr, std::size_t repeats) {
  const std::size_t k = expr.variables().size();
  if (k > 16) throw DomainError("boolean datasets support at most 16 variables");
  if (k == 0) throw DomainError("boolean expression has no variables");
  const std::size_t combos = std::size_t{1} << k;
  Dataset d;
  d.names = expr.variables();
  d.provenance = "boolean:" + expr.to_string();
  d.features.resize(static_cast<Eigen::Index>(combos * repeats), static_cast<Eigen::Index>(k));
  d.labels.reserve(combos * repeats);
  std::vector<double> truth(combos);
  std::vector<bool> values(k);
  for (std::size_t mask = 0; mask < combos; ++mask) {
    for (std::size_t i = 0; i < k; ++i) values[i] = ((mask >> (k - 1 - i)) & 1U) != 0;
    truth[mask] = expr.evaluate(values) ? 1.0 : 0.0;
  }
  Eigen::Index row = 0;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t mask = 0; mask < combos; ++mask, ++row) {
      for (std::size_t i = 0; i < k; ++i) {
        d.features(row, static_cast<Eigen::Index>(i)) = static_cast<double>((mask >> (k - 1 - i)) & 1U);
      }
      d.labels.push_back(truth[mask]);
    }
  }
  return d;
}

SplitIndices stratified_split(const std::vector<double>& labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DomainError("test fraction must lie in (0,1)");
  std::map<double, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < labels.size(); ++i) strata[labels[i]].push_back(i);
  Rng rng(seed);
  SplitIndices out;
  for (auto& [label, idx] : strata) {
    if (idx.size() < 2) {
      throw DomainError("class " + std::to_string(label) + " has fewer than 2 rows; cannot stratify");
    }
    shuffle(idx, rng);
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * test_fraction));
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.names = data.names;
  out.provenance = data.provenance;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

RawTable subset(const RawTable& table, const std::vector<std::size_t>& rows) {
  RawTable out;
  out.names = table.names;
  out.source = table.source;
  for (auto r : rows) {
    out.rows.push_back(table.rows[r]);
    out.labels.push_back(table.labels[r]);
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  const auto idx = stratified_split(data.labels, test_fraction, seed);
  return {subset(data, idx.train), subset(data, idx.test)};
}

std::pair<RawTable, RawTable> split(const RawTable& table, double test_fraction, std::uint64_t seed) {
  const auto idx = stratified_split(table.labels, test_fraction, seed);
  return {subset(table, idx.train), subset(table, idx.test)};
}

}  // namespace bacon
