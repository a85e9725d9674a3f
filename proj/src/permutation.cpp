#include "bacon/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bacon/error.hpp"

namespace bacon {
namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite entries");
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw ShapeError(std::string(what) + " must be square");
}

void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    const double lse = mx + std::log((m.row(i).array() - mx).exp().sum());
    m.row(i).array() -= lse;
  }
}

void normalize_cols(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mx = m.col(j).maxCoeff();
    const double lse = mx + std::log((m.col(j).array() - mx).exp().sum());
    m.col(j).array() -= lse;
  }
}

}  // namespace

bool is_permutation(const Permutation& perm, std::size_t n) {
  if (perm.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto p : perm) {
    if (p >= n || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

Matrix sample_gumbel(std::size_t n, double scale, Rng& rng) {
  if (!(scale >= 0.0)) throw DomainError("gumbel scale must be non-negative");
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix g(dim, dim);
  // Row-major draw order so the stream is independent of Eigen's storage.
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = scale * -std::log(-std::log(uniform_open01(rng)));
  }
  return g;
}

Matrix sinkhorn(const Matrix& m, double tau, int iters) { return SinkhornTrace(m, tau, iters).result(); }

SinkhornTrace::SinkhornTrace(const Matrix& m, double tau, int iters) : tau_(tau) {
  require_square(m, "sinkhorn input");
  require_finite(m, "sinkhorn input");
  if (!(tau > 0.0)) throw DomainError("sinkhorn temperature must be positive");
  if (iters < 1) throw DomainError("sinkhorn needs at least one iteration");

  log_states_.reserve(static_cast<std::size_t>(2 * iters + 1));
  Matrix state = m / tau;
  log_states_.push_back(state);
  for (int t = 0; t < iters; ++t) {
    normalize_rows(state);
    log_states_.push_back(state);
    normalize_cols(state);
    log_states_.push_back(state);
  }
  result_ = state.array().exp().matrix();
}

Matrix SinkhornTrace::backward(const Matrix& grad_result) const {
  // d exp
  Matrix grad = grad_result.cwiseProduct(result_);
  // Each half-step is out = in - lse(in) along an axis, whose adjoint is
  // d_in = d_out - softmax(in) * sum(d_out) with softmax(in) = exp(out).
  for (std::size_t s = log_states_.size() - 1; s >= 1; --s) {
    const Matrix soft = log_states_[s].array().exp().matrix();
    const bool row_step = (s % 2) == 1;
    if (row_step) {
      const Eigen::VectorXd sums = grad.rowwise().sum();
      for (Eigen::Index i = 0; i < grad.rows(); ++i) grad.row(i) -= sums(i) * soft.row(i);
    } else {
      const Eigen::RowVectorXd sums = grad.colwise().sum();
      for (Eigen::Index j = 0; j < grad.cols(); ++j) grad.col(j) -= sums(j) * soft.col(j);
    }
  }
  return grad / tau_;
}

Permutation hungarian(const Matrix& score) {
  require_square(score, "assignment score");
  require_finite(score, "assignment score");
  const auto n = static_cast<std::size_t>(score.rows());
  if (n == 0) return {};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Minimization on negated scores, 1-based with a dummy column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -score(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Permutation perm(n);
  for (std::size_t j = 1; j <= n; ++j) perm[match[j] - 1] = j - 1;
  return perm;
}

PermutationState::PermutationState(Matrix logits, double tau, double gumbel_scale, const PermutationConfig& config)
    : logits_(std::move(logits)), tau_(tau), gumbel_scale_(gumbel_scale), config_(config) {
  require_square(logits_, "permutation logits");
  if (!(tau_ > 0.0)) throw DomainError("sinkhorn temperature must be positive");
  if (!(config_.gumbel_min <= config_.gumbel_max)) throw DomainError("gumbel_min exceeds gumbel_max");
  set_gumbel_scale(gumbel_scale);
}

PermutationState PermutationState::initial(std::size_t n, const PermutationConfig& config, Rng& rng) {
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix logits(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) logits(i, j) = uniform(rng, -config.logit_init, config.logit_init);
  }
  return PermutationState(std::move(logits), config.tau0, config.gumbel_max, config);
}

PermutationState PermutationState::frozen_at(const Permutation& perm, const PermutationConfig& config) {
  const auto dim = static_cast<Eigen::Index>(perm.size());
  PermutationState state(Matrix::Zero(dim, dim), config.tau0, config.gumbel_min, config);
  return freeze(std::move(state), perm);
}

const Permutation& PermutationState::hard() const {
  if (!hard_) throw StateError("permutation layer is not frozen");
  return *hard_;
}

void PermutationState::set_tau(double tau) {
  if (!(tau > 0.0)) throw DomainError("sinkhorn temperature must be positive");
  tau_ = tau;
}

void PermutationState::set_gumbel_scale(double scale) {
  gumbel_scale_ = std::clamp(scale, config_.gumbel_min, config_.gumbel_max);
}

Permutation PermutationState::candidate() const { return hungarian(sinkhorn(logits_, tau_, config_.sinkhorn_iters)); }

Matrix soft_assignment(const PermutationState& state, Rng& rng) {
  if (state.frozen()) throw StateError("soft assignment requested from a frozen permutation layer");
  const Matrix noise = sample_gumbel(state.size(), state.gumbel_scale(), rng);
  return sinkhorn(state.logits() + noise, state.tau(), state.config().sinkhorn_iters);
}

PermutationState freeze(PermutationState state, const Permutation& candidate) {
  if (state.frozen()) throw StateError("permutation layer is already frozen");
  if (!is_permutation(candidate, state.size())) throw DomainError("freeze candidate is not a permutation");
  state.hard_ = candidate;
  return state;
}

std::vector<double> apply_permutation(const Permutation& perm, const std::vector<double>& sample) {
  if (perm.size() != sample.size()) throw ShapeError("permutation and sample sizes differ");
  std::vector<double> out(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = sample[perm[i]];
  return out;
}

}  // namespace bacon
