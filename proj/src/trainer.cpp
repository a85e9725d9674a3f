#include <cmath>
#include <deque>
#include <limits>

#include "bacon/training.hpp"

namespace bacon {
namespace {

// Adaptive moment estimation over the flattened parameter set.
class Adam {
 public:
  Adam(std::size_t size, double lr) : lr_(lr), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad, std::size_t skip_prefix) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = skip_prefix; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// Layout: logits (row-major n*n), theta_w, theta_a.
std::vector<double> pack(const Matrix& logits, const std::vector<double>& tw, const std::vector<double>& ta) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(logits.size()) + tw.size() + ta.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out.push_back(logits(i, j));
  }
  out.insert(out.end(), tw.begin(), tw.end());
  out.insert(out.end(), ta.begin(), ta.end());
  return out;
}

void unpack(const std::vector<double>& flat, ModelParams& params) {
  std::size_t p = 0;
  Matrix& logits = params.perm.logits();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) logits(i, j) = flat[p++];
  }
  for (auto& t : params.theta_w) t = flat[p++];
  for (auto& t : params.theta_a) t = flat[p++];
}

// Windowed improvement test: the best loss of the latest window must beat the
// best of the window before it by the given relative margin.
class LossHistory {
 public:
  LossHistory(int window, double ratio) : window_(static_cast<std::size_t>(window)), ratio_(ratio) {}

  bool record_and_check(double loss) {
    losses_.push_back(loss);
    if (losses_.size() > 2 * window_) losses_.pop_front();
    if (losses_.size() < 2 * window_) return true;
    double prev = std::numeric_limits<double>::infinity();
    double cur = prev;
    for (std::size_t i = 0; i < window_; ++i) prev = std::min(prev, losses_[i]);
    for (std::size_t i = window_; i < 2 * window_; ++i) cur = std::min(cur, losses_[i]);
    return cur <= prev * (1.0 - ratio_);
  }

 private:
  std::size_t window_;
  double ratio_;
  std::deque<double> losses_;
};

double accuracy(const std::vector<double>& scores, const std::vector<double>& labels, double threshold) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    // Graded targets count as positive above one half.
    if ((scores[i] >= threshold) == (labels[i] > 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace

void TrainingConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (attempts < 1) fail("attempts must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (!(loss_amplifier > 0.0)) fail("loss_amplifier must be positive");
  if (!(weight_penalty_strength >= 0.0)) fail("weight_penalty_strength must be non-negative");
  if (!(freeze_loss_threshold >= 0.0)) fail("freeze_loss_threshold must be non-negative");
  if (!(lock_loss_tolerance >= 0.0)) fail("lock_loss_tolerance must be non-negative");
  if (!(acceptance_threshold >= 0.0 && acceptance_threshold <= 1.0)) fail("acceptance_threshold must lie in [0,1]");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (history_window < 1) fail("history window must be >= 1");
  const auto& p = permutation;
  if (!(p.tau0 > 0.0)) fail("initial temperature must be positive");
  if (!(p.gumbel_min >= 0.0 && p.gumbel_min <= p.gumbel_max)) fail("need 0 <= gumbel_min <= gumbel_max");
  if (!(p.tau_decay > 0.0 && p.tau_decay <= 1.0)) fail("tau_decay must lie in (0,1]");
  if (p.sinkhorn_iters < 1) fail("sinkhorn iterations must be >= 1");
  if (p.tau_decay_every < 1) fail("tau decay period must be >= 1");
  parse_tree_layout(tree_layout);
}

TrainedModel train(const Dataset& data, const TrainingConfig& cfg, const TrainingObserver& observer) {
  cfg.validate();
  data.validate(false);
  const std::size_t n = data.feature_count();
  if (n < 2) throw DomainError("training needs at least two features");
  if (data.row_count() == 0) throw DomainError("training needs at least one row");

  const Eigen::MatrixXd& X = data.features;
  const std::span<const double> y(data.labels);
  const LossConfig lcfg{cfg.loss_amplifier, cfg.weight_penalty_strength};
  const std::size_t logit_count = n * n;

  std::vector<AttemptDiagnostics> history;
  for (int attempt = 1; attempt <= cfg.attempts; ++attempt) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(attempt)));
    ModelParams params = ModelParams::initial(n, cfg.permutation, rng, cfg.andness_init);
    if (cfg.is_frozen) params.perm = freeze(std::move(params.perm), identity_permutation(n));

    AttemptDiagnostics diag;
    diag.attempt = attempt;
    diag.best_soft_loss = std::numeric_limits<double>::infinity();
    diag.outcome = "never_froze";

    Adam adam(logit_count + 2 * (n - 1), cfg.learning_rate);
    LossHistory window(cfg.history_window, cfg.improvement_ratio);
    std::optional<ModelParams> best;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_epoch = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
      diag.epochs_run = epoch;
      if (epoch % cfg.permutation.tau_decay_every == 0) {
        params.perm.set_tau(params.perm.tau() * cfg.permutation.tau_decay);
      }

      const bool frozen = params.perm.frozen();
      std::optional<Matrix> noise;
      if (!frozen) noise = sample_gumbel(n, params.perm.gumbel_scale(), rng);
      const Gradients g = gradients(params, X, y, lcfg, noise ? &*noise : nullptr);

      const double gmax = g.max_abs();
      if (!g.finite() || gmax > cfg.exploding_gradient) {
        diag.outcome = "exploding_gradient";
        break;
      }
      if (gmax < cfg.vanishing_gradient) {
        diag.outcome = "vanishing_gradient";
        if (frozen && g.loss < best_loss) {
          best_loss = g.loss;
          best = params;
          best_epoch = epoch;
        }
        break;
      }

      const bool improving = window.record_and_check(g.loss);
      params.perm.set_gumbel_scale(params.perm.gumbel_scale() *
                                   (improving ? cfg.permutation.gumbel_dec : cfg.permutation.gumbel_inc));
      diag.final_loss = g.loss;
      if (observer) observer(attempt, epoch, g.loss, params.perm.gumbel_scale(), frozen);

      if (frozen) {
        if (g.loss < best_loss) {
          best_loss = g.loss;
          best = params;
          best_epoch = epoch;
        }
      } else {
        diag.best_soft_loss = std::min(diag.best_soft_loss, g.loss);
        if (g.loss < cfg.freeze_loss_threshold) {
          const Permutation cand = params.perm.candidate();
          const double hard = loss_with(params, cand, X, y, lcfg);
          if (hard < cfg.accept_loss() && hard - g.loss <= cfg.lock_loss_tolerance) {
            params.perm = freeze(std::move(params.perm), cand);
            diag.frozen = true;
            diag.freeze_epoch = epoch;
            best_loss = hard;
            best = params;
            best_epoch = epoch;
          }
        }
      }

      std::vector<double> flat = pack(params.perm.logits(), params.theta_w, params.theta_a);
      const std::vector<double> grad = pack(g.logits, g.theta_w, g.theta_a);
      adam.step(flat, grad, params.perm.frozen() ? logit_count : 0);
      unpack(flat, params);
    }

    if (params.perm.frozen()) {
      diag.frozen = true;
      // The last update has not been scored yet.
      const double last = loss(params, X, y, lcfg);
      if (last < best_loss) {
        best_loss = last;
        best = params;
        best_epoch = diag.epochs_run;
      }
      TrainedModel model{data.names, *best, extract_tree(*best, data.names), {}, std::nullopt};
      diag.final_loss = best_loss;
      diag.accuracy = accuracy(model.scores(data), data.labels, cfg.decision_threshold);
      if (diag.accuracy >= cfg.acceptance_threshold) {
        diag.outcome = "accepted";
        history.push_back(diag);
        model.metadata.seed = cfg.seed;
        model.metadata.attempt = attempt;
        model.metadata.epochs = best_epoch;
        model.metadata.freeze_epoch = diag.freeze_epoch;
        model.metadata.final_loss = best_loss;
        model.metadata.train_accuracy = diag.accuracy;
        model.metadata.history = std::move(history);
        return model;
      }
      if (diag.outcome == "never_froze") diag.outcome = "accuracy_below_target";
    }
    history.push_back(diag);
  }
  throw ConvergenceError("no model met the acceptance threshold after " + std::to_string(cfg.attempts) + " attempts",
                         std::move(history));
}

}  // namespace bacon
