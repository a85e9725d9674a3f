#include "bacon/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bacon {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kAndnessMargin = 1e-9;

void check_shapes(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const double> labels) {
  const auto n = params.feature_count();
  if (static_cast<std::size_t>(X.cols()) != n) {
    throw ShapeError("model expects " + std::to_string(n) + " features, data has " + std::to_string(X.cols()));
  }
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw ShapeError("label count does not match rows");
  if (X.rows() == 0) throw ShapeError("empty batch");
}

RowMatrix permute_hard(const Permutation& perm, const Eigen::MatrixXd& X) {
  RowMatrix xp(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) xp.col(i) = X.col(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
  return xp;
}

struct ChainNodes {
  std::vector<double> w;
  std::vector<double> a;
};

ChainNodes chain_nodes(const ModelParams& params) {
  ChainNodes c;
  for (std::size_t i = 0; i < params.node_count(); ++i) {
    c.w.push_back(sigmoid(params.theta_w[i]));
    c.a.push_back(trainable_andness(params.theta_a[i]));
  }
  return c;
}

// Forward fold with partials; fills per-node partial derivatives when requested.
double fold(const ChainNodes& nodes, const double* x, std::size_t n, Gcd2Partials* partials) {
  double z = x[0];
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Gcd2Partials p = gcd2_partials(z, x[k + 1], nodes.w[k], nodes.a[k]);
    if (partials) partials[k] = p;
    z = p.value;
  }
  return z;
}

std::vector<double> predict_rows(const ChainNodes& nodes, const RowMatrix& xp) {
  std::vector<double> out(static_cast<std::size_t>(xp.rows()));
  const auto n = static_cast<std::size_t>(xp.cols());
  for (Eigen::Index s = 0; s < xp.rows(); ++s) out[static_cast<std::size_t>(s)] = fold(nodes, xp.row(s).data(), n, nullptr);
  return out;
}

double penalty_term(const ModelParams& params, const LossConfig& cfg) {
  if (params.node_count() == 0) return 0.0;
  double sum = 0.0;
  for (double t : params.theta_w) {
    const double d = sigmoid(t) - 0.5;
    sum += d * d;
  }
  return cfg.penalty * sum / static_cast<double>(params.node_count());
}

double mse(const std::vector<double>& pred, std::span<const double> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - labels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

}  // namespace

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double trainable_andness(double theta_a) {
  return std::clamp(-1.0 + 3.0 * sigmoid(theta_a), kAndnessMin + kAndnessMargin, kAndnessMax - kAndnessMargin);
}

NodeParams ModelParams::node(std::size_t i) const { return {sigmoid(theta_w.at(i)), trainable_andness(theta_a.at(i))}; }

ModelParams ModelParams::initial(std::size_t n, const PermutationConfig& config, Rng& rng, double andness_init) {
  if (n < 2) throw DomainError("a model needs at least two features");
  PermutationState perm = PermutationState::initial(n, config, rng);
  std::vector<double> tw(n - 1, 0.0);
  std::vector<double> ta(n - 1);
  for (auto& t : ta) t = uniform(rng, -andness_init, andness_init);
  return {std::move(perm), std::move(tw), std::move(ta)};
}

Matrix assignment_matrix(const ModelParams& params, const Matrix* noise) {
  const auto& perm = params.perm;
  if (perm.frozen()) {
    const auto n = static_cast<Eigen::Index>(perm.size());
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) p(i, static_cast<Eigen::Index>(perm.hard()[static_cast<std::size_t>(i)])) = 1.0;
    return p;
  }
  const Matrix logits = noise ? Matrix(perm.logits() + *noise) : perm.logits();
  return sinkhorn(logits, perm.tau(), perm.config().sinkhorn_iters);
}

double forward(const ModelParams& params, std::span<const double> sample, Rng& rng) {
  const auto n = params.feature_count();
  if (sample.size() != n) throw ShapeError("sample size does not match model features");
  std::vector<double> xp(n);
  if (params.perm.frozen()) {
    const auto& perm = params.perm.hard();
    for (std::size_t i = 0; i < n; ++i) xp[i] = sample[perm[i]];
  } else {
    const Matrix p = soft_assignment(params.perm, rng);
    const Eigen::Map<const Eigen::VectorXd> x(sample.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd mixed = p * x;
    for (std::size_t i = 0; i < n; ++i) xp[i] = mixed(static_cast<Eigen::Index>(i));
  }
  return fold(chain_nodes(params), xp.data(), n, nullptr);
}

std::vector<double> predict(const ModelParams& params, const Eigen::MatrixXd& X, const Matrix* noise) {
  if (static_cast<std::size_t>(X.cols()) != params.feature_count()) throw ShapeError("feature count mismatch");
  if (params.perm.frozen()) return predict_rows(chain_nodes(params), permute_hard(params.perm.hard(), X));
  const Matrix p = assignment_matrix(params, noise);
  const RowMatrix xp = X * p.transpose();
  return predict_rows(chain_nodes(params), xp);
}

std::vector<double> predict_with(const ModelParams& params, const Permutation& perm, const Eigen::MatrixXd& X) {
  if (!is_permutation(perm, params.feature_count())) throw DomainError("not a permutation of the model features");
  if (static_cast<std::size_t>(X.cols()) != params.feature_count()) throw ShapeError("feature count mismatch");
  return predict_rows(chain_nodes(params), permute_hard(perm, X));
}

double loss(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const double> labels, const LossConfig& cfg,
            const Matrix* noise) {
  check_shapes(params, X, labels);
  return cfg.amplifier * (mse(predict(params, X, noise), labels) + penalty_term(params, cfg));
}

double loss_with(const ModelParams& params, const Permutation& perm, const Eigen::MatrixXd& X,
                 std::span<const double> labels, const LossConfig& cfg) {
  check_shapes(params, X, labels);
  return cfg.amplifier * (mse(predict_with(params, perm, X), labels) + penalty_term(params, cfg));
}

double Gradients::max_abs() const {
  double m = 0.0;
  auto visit = [&m](double v) {
    if (!std::isfinite(v)) m = std::numeric_limits<double>::infinity();
    else m = std::max(m, std::abs(v));
  };
  for (Eigen::Index i = 0; i < logits.size(); ++i) visit(logits.data()[i]);
  for (double v : theta_w) visit(v);
  for (double v : theta_a) visit(v);
  return m;
}

bool Gradients::finite() const { return std::isfinite(loss) && std::isfinite(max_abs()); }

Gradients gradients(const ModelParams& params, const Eigen::MatrixXd& X, std::span<const double> labels,
                    const LossConfig& cfg, const Matrix* noise) {
  check_shapes(params, X, labels);
  const auto n = params.feature_count();
  const auto m = static_cast<std::size_t>(X.rows());
  const bool frozen = params.perm.frozen();
  const ChainNodes nodes = chain_nodes(params);

  std::optional<SinkhornTrace> trace;
  RowMatrix xp;
  if (frozen) {
    xp = permute_hard(params.perm.hard(), X);
  } else {
    const Matrix logits = noise ? Matrix(params.perm.logits() + *noise) : params.perm.logits();
    trace.emplace(logits, params.perm.tau(), params.perm.config().sinkhorn_iters);
    xp = X * trace->result().transpose();
  }

  Gradients g;
  g.theta_w.assign(n - 1, 0.0);
  g.theta_a.assign(n - 1, 0.0);
  std::vector<double> dw(n - 1, 0.0), da(n - 1, 0.0);
  RowMatrix dxp = RowMatrix::Zero(xp.rows(), xp.cols());
  std::vector<Gcd2Partials> partials(n - 1);

  const double a = cfg.amplifier;
  double sq = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    const double pred = fold(nodes, xp.row(row).data(), n, partials.data());
    const double err = pred - labels[s];
    sq += err * err;
    double up = 2.0 * a * err / static_cast<double>(m);
    for (std::size_t k = n - 1; k-- > 0;) {
      const auto& p = partials[k];
      dw[k] += up * p.dw;
      da[k] += up * p.dalpha;
      dxp(row, static_cast<Eigen::Index>(k + 1)) += up * p.dy;
      up *= p.dx;
    }
    dxp(row, 0) += up;
  }
  g.loss = a * (sq / static_cast<double>(m) + penalty_term(params, cfg));

  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double sw = nodes.w[k];
    const double dsig_w = sw * (1.0 - sw);
    g.theta_w[k] = dw[k] * dsig_w + a * cfg.penalty * 2.0 * (sw - 0.5) * dsig_w / static_cast<double>(n - 1);
    const double raw_alpha = -1.0 + 3.0 * sigmoid(params.theta_a[k]);
    const bool saturated = raw_alpha != nodes.a[k];
    const double sa = sigmoid(params.theta_a[k]);
    g.theta_a[k] = saturated ? 0.0 : da[k] * 3.0 * sa * (1.0 - sa);
  }

  const auto dim = static_cast<Eigen::Index>(n);
  if (frozen) {
    g.logits = Matrix::Zero(dim, dim);
  } else {
    // xp = X * P^T  =>  dP = dxp^T * X
    const Matrix dp = dxp.transpose() * X;
    g.logits = trace->backward(dp);
  }
  return g;
}

LspTree extract_tree(const ModelParams& params, const std::vector<std::string>& input_names) {
  if (input_names.size() != params.feature_count()) throw ShapeError("feature name count does not match the model");
  const auto& perm = params.perm.hard();
  std::vector<std::string> features;
  for (auto idx : perm) features.push_back(input_names[idx]);
  std::vector<NodeParams> nodes;
  for (std::size_t i = 0; i < params.node_count(); ++i) nodes.push_back(params.node(i));
  return LspTree(std::move(features), std::move(nodes));
}

std::vector<double> TrainedModel::scores(const Dataset& data) const { return tree_scores(tree, data); }

std::vector<double> tree_scores(const LspTree& tree, const Dataset& data) {
  std::vector<std::size_t> cols;
  for (const auto& name : tree.features()) cols.push_back(data.column_index(name));
  std::vector<double> out(data.row_count());
  std::vector<double> sample(cols.size());
  for (std::size_t i = 0; i < data.row_count(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      sample[j] = data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[j]));
    }
    out[i] = evaluate(tree, sample);
  }
  return out;
}

}  // namespace bacon
