#include "bacon/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bacon/analysis.hpp"
#include "bacon/data.hpp"
#include "bacon/lsp_tree.hpp"
#include "bacon/training.hpp"
#include "httplib.h"
#include "json.hpp"

namespace bacon {
namespace {

constexpr const char* kTreeFormat = "bacon-tree";
constexpr const char* kEndpointVariable = "BACON_REPORT_ENDPOINT";

struct DataOptions {
  std::string data;
  std::string label;
  std::string positive;
  std::string normalizer = "minmax";
  std::vector<std::string> reverse;
  double test_fraction = 0.2;
  std::string subset;
};

// A trained model, or a tree saved by `prune`, plus what is needed to rebuild its inputs.
struct Artifact {
  LspTree tree;
  std::optional<NormalizerSpec> normalizer;
  nlohmann::json extra = nlohmann::json::object();
  std::optional<TrainedModel> model;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
}

nlohmann::json tree_document(const LspTree& tree, const std::optional<NormalizerSpec>& normalizer,
                             const nlohmann::json& extra) {
  auto nodes = nlohmann::json::array();
  for (const auto& node : tree.nodes()) nodes.push_back({{"weight", node.weight}, {"andness", node.andness}});
  return {{"format", kTreeFormat},
          {"version", kModelFormatVersion},
          {"features", tree.features()},
          {"nodes", std::move(nodes)},
          {"normalizer", normalizer ? normalizer_to_json(*normalizer) : nlohmann::json(nullptr)},
          {"metadata", extra}};
}

Artifact load_artifact(const std::string& path) {
  const nlohmann::json j = read_json(path);
  if (j.is_object() && j.value("format", "") == kTreeFormat) {
    try {
      if (j.at("version").get<int>() != kModelFormatVersion) throw ParseError("unsupported tree version");
      std::vector<NodeParams> nodes;
      for (const auto& n : j.at("nodes")) nodes.push_back({n.at("weight").get<double>(), n.at("andness").get<double>()});
      Artifact a{LspTree(j.at("features").get<std::vector<std::string>>(), std::move(nodes)), std::nullopt,
                 j.value("metadata", nlohmann::json::object()), std::nullopt};
      if (j.contains("normalizer") && !j.at("normalizer").is_null()) a.normalizer = normalizer_from_json(j.at("normalizer"));
      return a;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed tree file '" + path + "': " + e.what());
    }
  }
  TrainedModel model = model_from_json(j);
  Artifact a{model.tree, model.normalizer, model.metadata.extra, std::nullopt};
  a.model = std::move(model);
  return a;
}

std::vector<std::string> resolve_reversed(const std::vector<std::string>& requested,
                                          const std::vector<std::string>& names) {
  if (requested.size() == 1 && requested.front() == "all") return names;
  return requested;
}

RawTable load_raw(const DataOptions& o, const std::string& label, const std::string& positive) {
  RawTable raw = load_csv(o.data, label);
  if (!positive.empty()) {
    double value = 0.0;
    try {
      value = std::stod(positive);
    } catch (const std::exception&) {
      throw ConfigError("positive label must be numeric, got '" + positive + "'");
    }
    raw = binarize_labels(std::move(raw), value);
  }
  return raw;
}

std::string extra_string(const nlohmann::json& extra, const char* key) {
  if (!extra.contains(key) || extra.at(key).is_null()) return "";
  return extra.at(key).get<std::string>();
}

// Rebuilds the evaluation rows for a stored artifact: same label handling,
// same normalizer, and the recorded split when a subset is requested.
Dataset evaluation_data(const Artifact& a, const DataOptions& o) {
  const std::string label = o.label.empty() ? extra_string(a.extra, "label") : o.label;
  const std::string positive = o.positive.empty() ? extra_string(a.extra, "positive") : o.positive;
  DataOptions resolved = o;
  if (resolved.data.empty()) resolved.data = extra_string(a.extra, "data");
  if (resolved.data.empty()) throw ConfigError("no --data given and the model records no data file");
  RawTable raw = load_raw(resolved, label, positive);

  const double fraction = a.extra.value("test_fraction", 0.0);
  std::string subset = o.subset;
  if (subset.empty()) subset = fraction > 0.0 ? "test" : "all";
  if (subset != "all") {
    if (!(fraction > 0.0)) throw ConfigError("the model records no train/test split; use --subset all");
    auto [train_raw, test_raw] = split(raw, fraction, a.extra.value("split_seed", std::uint64_t{0}));
    raw = subset == "train" ? std::move(train_raw) : std::move(test_raw);
  }
  NormalizerSpec spec = a.normalizer ? *a.normalizer : fit_identity(raw);
  return apply(spec, raw);
}

void add_data_options(CLI::App* sub, DataOptions& o, bool training) {
  auto* data = sub->add_option("--data", o.data, "CSV file with a header row");
  if (training) data->required();
  else data->description("CSV file with a header row (default: the file recorded in the model)");
  sub->add_option("--label", o.label, "label column (default: last column, or the one recorded in the model)");
  sub->add_option("--positive", o.positive, "label value treated as positive (one-vs-rest)");
  if (training) {
    sub->add_option("--normalizer", o.normalizer, "minmax, robust_sigmoid or none")->capture_default_str();
    sub->add_option("--reverse", o.reverse, "columns mapped to 1 - x after normalization, or 'all'")
        ->delimiter(',');
    sub->add_option("--test-fraction", o.test_fraction, "held-out fraction of each class (0 trains on all rows)")
        ->check(CLI::Range(0.0, 0.9))
        ->capture_default_str();
  } else {
    sub->add_option("--subset", o.subset, "all, train or test (default: test when the model records a split)")
        ->check(CLI::IsMember({"all", "train", "test"}));
  }
}

struct Settings {
  TrainingConfig cfg;
  CLI::Option* accept_loss = nullptr;
  double accept_loss_value = 0.0;
  bool json = false;
};

void add_hyperparameters(CLI::App& app, Settings& s) {
  auto& c = s.cfg;
  auto& p = c.permutation;
  const std::string group = "Hyperparameters";
  auto opt = [&](const std::string& name, auto& target, const std::string& help) {
    return app.add_option(name, target, help)->capture_default_str()->group(group);
  };
  opt("--acceptance_threshold", c.acceptance_threshold, "training accuracy required to accept a frozen model");
  opt("--attempts", c.attempts, "training attempts before giving up");
  opt("--freeze_loss_threshold", c.freeze_loss_threshold, "soft loss below which a freeze is proposed");
  s.accept_loss = app.add_option("--accept_loss_threshold", s.accept_loss_value,
                                 "hard loss a proposed permutation must beat (default: freeze_loss_threshold)")
                      ->group(group);
  opt("--is_frozen", c.is_frozen, "start with the identity permutation frozen");
  opt("--lock_loss_tolerance", c.lock_loss_tolerance, "largest allowed loss increase when freezing");
  opt("--loss_amplifier", c.loss_amplifier, "loss scale factor");
  opt("--max_epochs", c.max_epochs, "epochs per attempt");
  opt("--save_model", c.save_model, "write the trained model");
  opt("--save_path", c.save_path, "model path when --model is not given");
  opt("--tree_layout", c.tree_layout, "aggregation tree layout (only 'left' is supported)");
  opt("--weight_penalty_strength", c.weight_penalty_strength, "pull of node weights toward 0.5");
  opt("--learning_rate", c.learning_rate, "Adam step size");
  opt("--seed", c.seed, "base random seed");
  opt("--decision_threshold", c.decision_threshold, "score at or above which a sample is positive");
  opt("--history_window", c.history_window, "loss window used to adapt the noise scale");
  opt("--andness_init", c.andness_init, "initial andness logits are uniform in [-v, v]");
  opt("--tau0", p.tau0, "initial Sinkhorn temperature");
  opt("--tau_decay", p.tau_decay, "temperature decay factor");
  opt("--tau_decay_every", p.tau_decay_every, "epochs between temperature decays");
  opt("--gumbel_min", p.gumbel_min, "smallest Gumbel noise scale");
  opt("--gumbel_max", p.gumbel_max, "largest Gumbel noise scale");
  opt("--gumbel_inc", p.gumbel_inc, "noise growth factor while the loss stalls");
  opt("--gumbel_dec", p.gumbel_dec, "noise decay factor while the loss improves");
  opt("--sinkhorn_iters", p.sinkhorn_iters, "Sinkhorn normalization rounds");
  opt("--logit_init", p.logit_init, "initial permutation logits are uniform in [-v, v]");
}

TrainingConfig resolved(const Settings& s) {
  TrainingConfig cfg = s.cfg;
  if (s.accept_loss->count() > 0) cfg.accept_loss_threshold = s.accept_loss_value;
  return cfg;
}

void emit(std::ostream& out, const Settings& s, const std::string& out_path, const nlohmann::ordered_json& j,
          const std::string& table) {
  if (!out_path.empty()) write_text(out_path, j.dump(2) + "\n");
  if (s.json) out << j.dump(2) << '\n';
  else out << table;
}

std::string metrics_text(const std::string& name, const Metrics& m) {
  std::ostringstream os;
  os << name << ": accuracy " << m.accuracy << " precision " << m.precision << (m.precision_undefined ? " (undefined)" : "")
     << " recall " << m.recall << (m.recall_undefined ? " (undefined)" : "") << '\n';
  return os.str();
}

int cmd_train(const Settings& s, const DataOptions& o, const std::string& model_path, const std::string& log_path,
              std::ostream& out, std::ostream& err) {
  const TrainingConfig cfg = resolved(s);
  cfg.validate();
  RawTable raw = load_raw(o, o.label, o.positive);
  RawTable train_raw = raw;
  std::optional<RawTable> test_raw;
  if (o.test_fraction > 0.0) {
    auto parts = split(raw, o.test_fraction, cfg.seed);
    train_raw = std::move(parts.first);
    test_raw = std::move(parts.second);
  }
  NormalizerSpec spec = fit_normalizer(train_raw, parse_normalizer_kind(o.normalizer));
  for (const auto& c : resolve_reversed(o.reverse, spec.names)) spec.reversed_columns.insert(c);
  for (const auto& w : spec.warnings) err << "warning: " << w << '\n';
  const Dataset train_data = apply(spec, train_raw);

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw ParseError("cannot write '" + log_path + "'");
    log << "attempt,epoch,loss,gumbel_scale,frozen\n";
  }
  TrainingObserver observer;
  if (log.is_open()) {
    observer = [&log](int attempt, int epoch, double loss_value, double scale, bool frozen) {
      log << attempt << ',' << epoch << ',' << loss_value << ',' << scale << ',' << (frozen ? 1 : 0) << '\n';
    };
  }

  TrainedModel model = [&] {
    try {
      return train(train_data, cfg, observer);
    } catch (const ConvergenceError& e) {
      for (const auto& d : e.attempts()) {
        err << "attempt " << d.attempt << ": " << d.outcome << " after " << d.epochs_run << " epochs, best soft loss "
            << d.best_soft_loss << '\n';
      }
      throw;
    }
  }();
  model.normalizer = spec;
  model.metadata.extra = {{"data", o.data},
                          {"label", o.label},
                          {"positive", o.positive.empty() ? nlohmann::json(nullptr) : nlohmann::json(o.positive)},
                          {"test_fraction", o.test_fraction},
                          {"split_seed", cfg.seed}};
  for (const auto& d : model.metadata.history) {
    err << "attempt " << d.attempt << ": " << d.outcome << " (freeze epoch " << d.freeze_epoch << ")\n";
  }

  nlohmann::ordered_json report;
  report["attempt"] = model.metadata.attempt;
  report["freeze_epoch"] = model.metadata.freeze_epoch;
  report["final_loss"] = model.metadata.final_loss;
  const Metrics train_m = metrics(model.scores(train_data), train_data.labels, cfg.decision_threshold);
  report["train"] = to_json(train_m);
  std::string table = metrics_text("train", train_m);
  if (test_raw) {
    const Dataset test_data = apply(spec, *test_raw);
    const Metrics test_m = metrics(model.scores(test_data), test_data.labels, cfg.decision_threshold);
    report["test"] = to_json(test_m);
    table += metrics_text("test", test_m);
  }
  const std::string path = model_path.empty() ? cfg.save_path : model_path;
  if (cfg.save_model) {
    save_model(model, path);
    report["model"] = path;
    table += "model written to " + path + '\n';
  }
  emit(out, s, "", report, table);
  return kExitOk;
}

int cmd_evaluate(const Settings& s, const DataOptions& o, const std::string& model_path, const std::string& out_path,
                 double threshold, std::ostream& out) {
  const Artifact a = load_artifact(model_path);
  const Dataset data = evaluation_data(a, o);
  const Metrics m = metrics(tree_scores(a.tree, data), data.labels, threshold);
  auto j = to_json(m);
  j["threshold"] = threshold;
  j["rows"] = data.row_count();
  emit(out, s, out_path, j, metrics_text("threshold " + std::to_string(threshold), m));
  return kExitOk;
}

int cmd_prune(const Settings& s, const std::string& model_path, std::size_t k, const std::string& out_path,
              std::ostream& out) {
  const Artifact a = load_artifact(model_path);
  const LspTree pruned = prune(a.tree, k);
  nlohmann::json extra = a.extra;
  extra["pruned_from"] = model_path;
  extra["pruned"] = k;
  const nlohmann::json doc = tree_document(pruned, a.normalizer, extra);
  if (!out_path.empty()) write_text(out_path, doc.dump(2) + "\n");

  nlohmann::ordered_json report;
  report["pruned"] = k;
  report["removed"] = std::vector<std::string>(a.tree.features().begin(), a.tree.features().begin() + static_cast<std::ptrdiff_t>(k));
  report["retained"] = pruned.features();
  if (!out_path.empty()) report["out"] = out_path;
  std::ostringstream table;
  table << "removed " << k << " feature(s); retained (deepest first):";
  for (const auto& f : pruned.features()) table << ' ' << f;
  table << '\n';
  if (!out_path.empty()) table << "pruned tree written to " << out_path << '\n';
  emit(out, s, "", report, table.str());
  return kExitOk;
}

int cmd_explain(const std::string& model_path, bool merge, const std::string& out_path, std::ostream& out) {
  const Artifact a = load_artifact(model_path);
  const std::string tree_json = to_json(simplify(a.tree, merge));
  if (!out_path.empty()) write_text(out_path, tree_json + "\n");
  out << tree_json << '\n' << "expression: " << to_expression(a.tree) << '\n';
  return kExitOk;
}

int cmd_thresholds(const Settings& s, const DataOptions& o, const std::string& model_path, double step,
                   const std::string& out_path, std::ostream& out) {
  const Artifact a = load_artifact(model_path);
  const Dataset data = evaluation_data(a, o);
  const std::vector<double> scores = tree_scores(a.tree, data);
  const ThresholdReport r = threshold_sweep(scores, data.labels, step);
  emit(out, s, out_path, to_json(r), format_table(r));
  return kExitOk;
}

int cmd_attribution(const Settings& s, const DataOptions& o, const std::string& model_path,
                    const std::string& out_path, std::ostream& out) {
  const Artifact a = load_artifact(model_path);
  if (!a.model) throw ConfigError("attribution needs a full model, not a pruned tree");
  const Dataset data = evaluation_data(a, o);
  const AttributionReport r = attribution(*a.model, data, s.cfg.decision_threshold);
  emit(out, s, out_path, to_json(r), format_table(r));
  return kExitOk;
}

int cmd_boolgen(const std::string& expr_text, std::size_t repeats, const std::string& out_path, std::ostream& out) {
  const BoolExpr expr = BoolExpr::parse(expr_text);
  const Dataset data = boolean_dataset(expr, repeats);
  if (!out_path.empty()) {
    write_csv(data, out_path);
    return kExitOk;
  }
  for (std::size_t j = 0; j < data.feature_count(); ++j) out << data.names[j] << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.row_count(); ++i) {
    for (std::size_t j = 0; j < data.feature_count(); ++j) {
      out << data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << ',';
    }
    out << data.labels[i] << '\n';
  }
  return kExitOk;
}

int cmd_boolcheck(const Settings& s, const std::string& model_path, const std::string& expr_text,
                  const std::string& out_path, std::ostream& out) {
  const Artifact a = load_artifact(model_path);
  const BoolExpr expr = BoolExpr::parse(expr_text);
  const EquivalenceReport r = bool_equivalence(a.tree, expr, s.cfg.decision_threshold);
  std::ostringstream table;
  table << "equivalent: " << (r.equivalent ? "yes" : "no") << '\n' << "operators (bottom to top):";
  for (AndnessCode c : r.codes) table << ' ' << code_symbol(c);
  table << '\n';
  for (const auto& m : r.mismatches) {
    table << "mismatch:";
    for (std::size_t i = 0; i < m.assignment.size(); ++i) table << ' ' << expr.variables()[i] << '=' << m.assignment[i];
    table << " expected " << m.expected << " score " << m.score << '\n';
  }
  emit(out, s, out_path, to_json(r, expr), table.str());
  return kExitOk;
}

// Minimal http://host[:port]/path splitter for the optional report endpoint.
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError(std::string(kEndpointVariable) + " must be an http:// URL");
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

int cmd_report_prompt(const std::string& model_path, const std::string& context, bool merge, bool send,
                      const std::string& out_path, std::ostream& out) {
  const Artifact a = load_artifact(model_path);
  const std::string prompt = emit_report_prompt(simplify(a.tree, merge), context);
  if (!out_path.empty()) write_text(out_path, prompt);
  if (!send) {
    out << prompt;
    return kExitOk;
  }
  const char* endpoint = std::getenv(kEndpointVariable);
  if (endpoint == nullptr || *endpoint == '\0') {
    throw ConfigError(std::string("--send needs the ") + kEndpointVariable + " environment variable");
  }
  const auto [base, path] = split_endpoint(endpoint);
  httplib::Client client(base);
  client.set_read_timeout(120, 0);
  const auto response = client.Post(path, prompt, "text/plain");
  if (!response) throw ParseError("request to " + std::string(endpoint) + " failed: " + httplib::to_string(response.error()));
  out << response->body;
  if (!response->body.empty() && response->body.back() != '\n') out << '\n';
  return response->status >= 200 && response->status < 300 ? kExitOk : kExitBadInput;
}

int cmd_repeat(const Settings& s, const DataOptions& o, int runs, std::size_t top, const std::string& out_path,
               std::ostream& out, std::ostream& err) {
  RepeatConfig rc;
  rc.runs = runs;
  rc.test_fraction = o.test_fraction;
  rc.normalizer = parse_normalizer_kind(o.normalizer);
  rc.top_features = top;
  rc.training = resolved(s);
  rc.training.validate();
  const RawTable raw = load_raw(o, o.label, o.positive);
  rc.reversed_columns = resolve_reversed(o.reverse, raw.names);
  const RepeatReport r = repeated_eval(raw, rc, [&err](const Dataset& d, const TrainingConfig& c) {
    TrainedModel m = train(d, c);
    err << "seed " << c.seed << ": accepted on attempt " << m.metadata.attempt << '\n';
    return m;
  });
  emit(out, s, out_path, to_json(r), format_table(r));
  return r.failures == r.runs.size() ? kExitNoConvergence : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graded-logic classifier: train, inspect and export aggregation trees", "bacon"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key = value file with hyperparameter settings");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Settings s;
  add_hyperparameters(app, s);
  app.add_flag("--json", s.json, "print machine-readable JSON instead of tables");

  DataOptions data;
  std::string model_path, out_path, log_path, expr_text, context = "Binary classification decision.";
  std::size_t repeats = 100, k = 0, top = 5;
  int runs = 20;
  double step = 0.01, threshold = 0.5;
  bool merge = false, send = false;

  auto* train_cmd = app.add_subcommand("train", "train a model and write it to --model");
  add_data_options(train_cmd, data, true);
  train_cmd->add_option("--model", model_path, "output model file (default: save_path)");
  train_cmd->add_option("--log", log_path, "per-epoch CSV training log");

  auto* eval_cmd = app.add_subcommand("evaluate", "accuracy, precision and recall of a model");
  add_data_options(eval_cmd, data, false);
  eval_cmd->add_option("--model", model_path, "model or pruned tree file")->required();
  eval_cmd->add_option("--threshold", threshold, "decision threshold")->capture_default_str();
  eval_cmd->add_option("--out", out_path, "JSON report path");

  auto* prune_cmd = app.add_subcommand("prune", "drop the k deepest features of a model");
  prune_cmd->add_option("--model", model_path, "model or pruned tree file")->required();
  prune_cmd->add_option("--k", k, "number of features to remove")->required();
  prune_cmd->add_option("--out", out_path, "pruned tree file");

  auto* explain_cmd = app.add_subcommand("explain", "simplified tree JSON and closed-form expression");
  explain_cmd->add_option("--model", model_path, "model or pruned tree file")->required();
  explain_cmd->add_flag("--merge", merge, "merge consecutive nodes with the same operator code");
  explain_cmd->add_option("--out", out_path, "tree JSON path");

  auto* thresholds_cmd = app.add_subcommand("thresholds", "sweep decision thresholds");
  add_data_options(thresholds_cmd, data, false);
  thresholds_cmd->add_option("--model", model_path, "model or pruned tree file")->required();
  thresholds_cmd->add_option("--threshold-step", step, "grid spacing in (0, 0.5]")->capture_default_str();
  thresholds_cmd->add_option("--out", out_path, "JSON report path");

  auto* attribution_cmd = app.add_subcommand("attribution", "accuracy after pruning 0 .. n-2 features");
  add_data_options(attribution_cmd, data, false);
  attribution_cmd->add_option("--model", model_path, "model file")->required();
  attribution_cmd->add_option("--out", out_path, "JSON report path");

  auto* boolgen_cmd = app.add_subcommand("boolgen", "truth-table dataset for a Boolean expression");
  boolgen_cmd->add_option("--expr", expr_text, "expression, e.g. \"(A and B) or C\"")->required();
  boolgen_cmd->add_option("--repeats", repeats, "copies of the truth table")->capture_default_str();
  boolgen_cmd->add_option("--out", out_path, "CSV path (default: stdout)");

  auto* boolcheck_cmd = app.add_subcommand("boolcheck", "compare a model with a Boolean expression");
  boolcheck_cmd->add_option("--model", model_path, "model or pruned tree file")->required();
  boolcheck_cmd->add_option("--expr", expr_text, "expression over the model's features")->required();
  boolcheck_cmd->add_option("--out", out_path, "JSON report path");

  auto* prompt_cmd = app.add_subcommand("report-prompt", "prompt asking a language model for a written report");
  prompt_cmd->add_option("--model", model_path, "model or pruned tree file")->required();
  prompt_cmd->add_option("--context", context, "one-line description of the decision task");
  prompt_cmd->add_flag("--merge", merge, "merge consecutive nodes with the same operator code");
  prompt_cmd->add_flag("--send", send, std::string("POST the prompt to $") + kEndpointVariable + " and print the reply");
  prompt_cmd->add_option("--out", out_path, "prompt text path");

  auto* repeat_cmd = app.add_subcommand("repeat", "train on several seeded splits and report a confidence interval");
  add_data_options(repeat_cmd, data, true);
  repeat_cmd->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber)->capture_default_str();
  repeat_cmd->add_option("--top", top, "features listed per run")->capture_default_str();
  repeat_cmd->add_option("--out", out_path, "JSON report path");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(s, data, model_path, log_path, out, err);
    if (eval_cmd->parsed()) return cmd_evaluate(s, data, model_path, out_path, threshold, out);
    if (prune_cmd->parsed()) return cmd_prune(s, model_path, k, out_path, out);
    if (explain_cmd->parsed()) return cmd_explain(model_path, merge, out_path, out);
    if (thresholds_cmd->parsed()) return cmd_thresholds(s, data, model_path, step, out_path, out);
    if (attribution_cmd->parsed()) return cmd_attribution(s, data, model_path, out_path, out);
    if (boolgen_cmd->parsed()) return cmd_boolgen(expr_text, repeats, out_path, out);
    if (boolcheck_cmd->parsed()) return cmd_boolcheck(s, model_path, expr_text, out_path, out);
    if (prompt_cmd->parsed()) return cmd_report_prompt(model_path, context, merge, send, out_path, out);
    if (repeat_cmd->parsed()) return cmd_repeat(s, data, runs, top, out_path, out, err);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitConfig;
}

}  // namespace bacon
