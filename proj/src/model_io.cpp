#include <fstream>
#include <limits>
#include <sstream>

#include "bacon/training.hpp"

namespace bacon {
namespace {

// Non-finite doubles are written as null by the JSON library.
double number_or_inf(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

nlohmann::json diagnostics_to_json(const AttemptDiagnostics& d) {
  return {{"attempt", d.attempt},
          {"epochs_run", d.epochs_run},
          {"frozen", d.frozen},
          {"freeze_epoch", d.freeze_epoch},
          {"final_loss", d.final_loss},
          {"best_soft_loss", d.best_soft_loss},
          {"accuracy", d.accuracy},
          {"outcome", d.outcome}};
}

AttemptDiagnostics diagnostics_from_json(const nlohmann::json& j) {
  AttemptDiagnostics d;
  d.attempt = j.at("attempt").get<int>();
  d.epochs_run = j.at("epochs_run").get<int>();
  d.frozen = j.at("frozen").get<bool>();
  d.freeze_epoch = j.at("freeze_epoch").get<int>();
  d.final_loss = number_or_inf(j.at("final_loss"));
  d.best_soft_loss = number_or_inf(j.at("best_soft_loss"));
  d.accuracy = number_or_inf(j.at("accuracy"));
  d.outcome = j.at("outcome").get<std::string>();
  return d;
}

nlohmann::json permutation_config_to_json(const PermutationConfig& c) {
  return {{"tau0", c.tau0},
          {"gumbel_min", c.gumbel_min},
          {"gumbel_max", c.gumbel_max},
          {"gumbel_inc", c.gumbel_inc},
          {"gumbel_dec", c.gumbel_dec},
          {"tau_decay", c.tau_decay},
          {"tau_decay_every", c.tau_decay_every},
          {"sinkhorn_iters", c.sinkhorn_iters},
          {"logit_init", c.logit_init}};
}

PermutationConfig permutation_config_from_json(const nlohmann::json& j) {
  PermutationConfig c;
  c.tau0 = j.at("tau0").get<double>();
  c.gumbel_min = j.at("gumbel_min").get<double>();
  c.gumbel_max = j.at("gumbel_max").get<double>();
  c.gumbel_inc = j.at("gumbel_inc").get<double>();
  c.gumbel_dec = j.at("gumbel_dec").get<double>();
  c.tau_decay = j.at("tau_decay").get<double>();
  c.tau_decay_every = j.at("tau_decay_every").get<int>();
  c.sinkhorn_iters = j.at("sinkhorn_iters").get<int>();
  c.logit_init = j.at("logit_init").get<double>();
  return c;
}

}  // namespace

nlohmann::json model_to_json(const TrainedModel& model) {
  const auto& p = model.params;
  nlohmann::json j;
  j["format"] = "bacon-model";
  j["version"] = kModelFormatVersion;
  j["features"] = model.input_names;
  j["tree_features"] = model.tree.features();
  j["P_hard"] = p.perm.hard();
  j["theta_w"] = p.theta_w;
  j["theta_a"] = p.theta_a;

  auto logits = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.perm.logits().rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p.perm.logits().cols(); ++k) row.push_back(p.perm.logits()(i, k));
    logits.push_back(std::move(row));
  }
  j["permutation"] = {{"logits", std::move(logits)},
                      {"tau", p.perm.tau()},
                      {"gumbel_scale", p.perm.gumbel_scale()},
                      {"config", permutation_config_to_json(p.perm.config())}};
  j["normalizer"] = model.normalizer ? normalizer_to_json(*model.normalizer) : nlohmann::json(nullptr);

  const auto& m = model.metadata;
  auto hist = nlohmann::json::array();
  for (const auto& d : m.history) hist.push_back(diagnostics_to_json(d));
  j["metadata"] = {{"seed", m.seed},
                   {"attempt", m.attempt},
                   {"epochs", m.epochs},
                   {"freeze_epoch", m.freeze_epoch},
                   {"final_loss", m.final_loss},
                   {"train_accuracy", m.train_accuracy},
                   {"history", std::move(hist)},
                   {"extra", m.extra}};
  return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "bacon-model") throw ParseError("not a model document");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError("unsupported model version " + std::to_string(version) + " (expected " +
                       std::to_string(kModelFormatVersion) + ")");
    }
    const auto names = j.at("features").get<std::vector<std::string>>();
    const auto hard = j.at("P_hard").get<Permutation>();
    const auto n = names.size();
    if (!is_permutation(hard, n)) throw ParseError("P_hard is not a permutation of the features");

    const auto& pj = j.at("permutation");
    const auto& lj = pj.at("logits");
    if (lj.size() != n) throw ParseError("logit matrix has the wrong size");
    Matrix logits(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (lj[i].size() != n) throw ParseError("logit matrix has the wrong size");
      for (std::size_t k = 0; k < n; ++k) {
        logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = lj[i][k].get<double>();
      }
    }
    PermutationState perm(std::move(logits), pj.at("tau").get<double>(), pj.at("gumbel_scale").get<double>(),
                          permutation_config_from_json(pj.at("config")));
    perm = freeze(std::move(perm), hard);

    ModelParams params{std::move(perm), j.at("theta_w").get<std::vector<double>>(),
                       j.at("theta_a").get<std::vector<double>>()};
    if (params.theta_w.size() + 1 != n || params.theta_a.size() + 1 != n) {
      throw ParseError("node parameter count does not match the features");
    }

    std::optional<NormalizerSpec> normalizer;
    if (j.contains("normalizer") && !j.at("normalizer").is_null()) normalizer = normalizer_from_json(j.at("normalizer"));

    TrainingMetadata meta;
    const auto& mj = j.at("metadata");
    meta.seed = mj.at("seed").get<std::uint64_t>();
    meta.attempt = mj.at("attempt").get<int>();
    meta.epochs = mj.at("epochs").get<int>();
    meta.freeze_epoch = mj.at("freeze_epoch").get<int>();
    meta.final_loss = mj.at("final_loss").get<double>();
    meta.train_accuracy = mj.at("train_accuracy").get<double>();
    for (const auto& d : mj.at("history")) meta.history.push_back(diagnostics_from_json(d));
    meta.extra = mj.value("extra", nlohmann::json::object());

    LspTree tree = extract_tree(params, names);
    return TrainedModel{names, std::move(params), std::move(tree), std::move(meta), std::move(normalizer)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file '" + path.string() + "'");
  out << model_to_json(model).dump(2) << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed model file '" + path.string() + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace bacon
