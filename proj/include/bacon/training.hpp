#pragma once

// Differentiable forward pass, loss, reverse-mode gradients and the two-phase
// (explore, then freeze and fine-tune) training loop.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bacon/data.hpp"
#include "bacon/error.hpp"
#include "bacon/lsp_tree.hpp"
#include "bacon/permutation.hpp"

namespace bacon {

double sigmoid(double t);

/// Trainable parameters. weights = sigmoid(theta_w), andness = -1 + 3 sigmoid(theta_a).
struct ModelParams {
  PermutationState perm;
  std::vector<double> theta_w;
  std::vector<double> theta_a;

  std::size_t feature_count() const { return perm.size(); }
  std::size_t node_count() const { return theta_w.size(); }
  NodeParams node(std::size_t i) const;

  /// Small random start: logits per PermutationConfig, theta_w = 0,
  /// theta_a uniform in [-andness_init, andness_init].
  static ModelParams initial(std::size_t n, const PermutationConfig& config, Rng& rng, double andness_init = 0.5);
};

/// Andness used during training. Saturated sigmoids are kept a hair inside
/// (-1, 2) so the drastic endpoints are never reached.
double trainable_andness(double theta_a);

struct LossConfig {
  double amplifier = 1.0;
  double penalty = 0.0;
};

/// Soft assignment matrix for the current state, or the permutation matrix when frozen.
Matrix assignment_matrix(const ModelParams& params, const Matrix* noise);

/// Single-sample prediction. Soft mode draws fresh Gumbel noise from rng;
/// frozen mode consumes no randomness.
double forward(const ModelParams& params, std::span<const double> sample, Rng& rng);

/// Predictions for every row of X under a fixed noise matrix (or the hard permutation).
std::vector<double> predict(const ModelParams& params, const Eigen::MatrixXd& X, const Matrix* noise = nullptr);

/// Predictions with an explicit exact permutation, regardless of the state's mode.
std::vector<double> predict_with(const ModelParams& params, const Permutation& perm, const Eigen::MatrixXd& X);

/// a * (MSE + penalty * mean((sigmoid(theta_w) - 0.5)^2)).
double loss(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const double> labels, const LossConfig& cfg,
            const Matrix* noise = nullptr);

double loss_with(const ModelParams& params, const Permutation& perm, const Eigen::MatrixXd& X,
                 std::span<const double> labels, const LossConfig& cfg);

struct Gradients {
  double loss = 0.0;
  Matrix logits;  // all zeros when frozen
  std::vector<double> theta_w;
  std::vector<double> theta_a;

  /// L-infinity norm over every component; +inf if any entry is non-finite.
  double max_abs() const;
  bool finite() const;
};

/// Reverse-mode gradient of loss() with respect to every raw parameter.
Gradients gradients(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const double> labels,
                    const LossConfig& cfg, const Matrix* noise = nullptr);

struct TrainingConfig {
  // Named hyperparameters.
  double acceptance_threshold = 0.9;
  int attempts = 100;
  double freeze_loss_threshold = 0.01;
  std::optional<double> accept_loss_threshold;  // defaults to freeze_loss_threshold
  bool is_frozen = false;
  double lock_loss_tolerance = 0.05;
  double loss_amplifier = 1.0;
  int max_epochs = 3000;
  bool save_model = true;
  std::string save_path = "./assembler.json";
  std::string tree_layout = "left";
  double weight_penalty_strength = 1e-4;

  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  double decision_threshold = 0.5;
  int history_window = 100;
  double improvement_ratio = 1e-3;
  double vanishing_gradient = 1e-10;
  double exploding_gradient = 1e4;
  double andness_init = 0.5;
  PermutationConfig permutation;

  double accept_loss() const { return accept_loss_threshold.value_or(freeze_loss_threshold); }
  void validate() const;  // throws ConfigError
};

struct AttemptDiagnostics {
  int attempt = 0;
  int epochs_run = 0;
  bool frozen = false;
  int freeze_epoch = -1;
  double final_loss = 0.0;
  double best_soft_loss = 0.0;
  double accuracy = 0.0;
  std::string outcome;  // accepted / accuracy_below_target / never_froze / vanishing_gradient / exploding_gradient
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<AttemptDiagnostics> attempts)
      : Error(what), attempts_(std::move(attempts)) {}
  const std::vector<AttemptDiagnostics>& attempts() const { return attempts_; }

 private:
  std::vector<AttemptDiagnostics> attempts_;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  int attempt = 0;
  int epochs = 0;
  int freeze_epoch = -1;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
  std::vector<AttemptDiagnostics> history;
  nlohmann::json extra = nlohmann::json::object();  // split info, label column, ...
};

struct TrainedModel {
  std::vector<std::string> input_names;  // dataset column order
  ModelParams params;                    // frozen
  LspTree tree;                          // features reordered by params.perm.hard()
  TrainingMetadata metadata;
  std::optional<NormalizerSpec> normalizer;

  std::vector<double> scores(const Dataset& data) const;
};

/// Scores of a tree on a dataset, matching tree features to columns by name.
std::vector<double> tree_scores(const LspTree& tree, const Dataset& data);

/// Extracts the symbolic tree from frozen parameters.
LspTree extract_tree(const ModelParams& params, const std::vector<std::string>& input_names);

/// Per-epoch callback for logging; receives attempt, epoch, loss, noise scale, frozen flag.
using TrainingObserver = std::function<void(int, int, double, double, bool)>;

/// Runs the attempt loop. Throws ConvergenceError when no attempt yields a
/// frozen model meeting acceptance_threshold on the training data.
TrainedModel train(const Dataset& data, const TrainingConfig& cfg, const TrainingObserver& observer = {});

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace bacon
