#pragma once

// Learnable feature ordering: Gumbel perturbation, log-space Sinkhorn
// normalization, and Hungarian hardening.
//
// Matrices are indexed [position, feature]: row i of an assignment says which
// input features feed tree position i.

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "bacon/rng.hpp"

namespace bacon {

using Matrix = Eigen::MatrixXd;

/// perm[i] = feature index placed at tree position i.
using Permutation = std::vector<std::size_t>;

bool is_permutation(const Permutation& perm, std::size_t n);
Permutation identity_permutation(std::size_t n);

struct PermutationConfig {
  double tau0 = 1.0;
  double gumbel_min = 0.1;
  double gumbel_max = 2.0;
  double gumbel_inc = 1.05;
  double gumbel_dec = 0.98;
  double tau_decay = 0.95;
  int tau_decay_every = 1000;
  int sinkhorn_iters = 20;
  double logit_init = 0.1;  // logits start i.i.d. uniform in [-logit_init, logit_init]
};

/// n x n matrix of independent draws scale * (-log(-log U)).
Matrix sample_gumbel(std::size_t n, double scale, Rng& rng);

/// exp(m / tau) alternately row- and column-normalized `iters` times in log
/// space. Throws NumericError on non-finite input, DomainError on tau <= 0 or
/// iters < 1.
Matrix sinkhorn(const Matrix& m, double tau, int iters);

/// Stores every half-step so the unrolled iterations can be differentiated.
class SinkhornTrace {
 public:
  SinkhornTrace(const Matrix& m, double tau, int iters);

  const Matrix& result() const { return result_; }

  /// Given dL/d(result), returns dL/dm.
  Matrix backward(const Matrix& grad_result) const;

 private:
  double tau_;
  std::vector<Matrix> log_states_;  // log-space matrix after each half-step
  Matrix result_;
};

/// Maximum-total-score assignment (Kuhn-Munkres, O(n^3)). Deterministic:
/// among equal-score alternatives, earlier rows settle on lower columns.
Permutation hungarian(const Matrix& score);

class PermutationState {
 public:
  PermutationState(Matrix logits, double tau, double gumbel_scale, const PermutationConfig& config);

  /// Logits drawn uniformly in [-logit_init, logit_init]; tau = tau0 and the
  /// noise scale starts at gumbel_max.
  static PermutationState initial(std::size_t n, const PermutationConfig& config, Rng& rng);

  /// Frozen state built directly from a permutation (no learnable ordering).
  static PermutationState frozen_at(const Permutation& perm, const PermutationConfig& config);

  std::size_t size() const { return static_cast<std::size_t>(logits_.rows()); }
  const Matrix& logits() const { return logits_; }
  Matrix& logits() { return logits_; }
  double tau() const { return tau_; }
  double gumbel_scale() const { return gumbel_scale_; }
  const PermutationConfig& config() const { return config_; }
  bool frozen() const { return hard_.has_value(); }
  const Permutation& hard() const;

  void set_tau(double tau);
  void set_gumbel_scale(double scale);  // clamped to [gumbel_min, gumbel_max]

  /// Noise-free Sinkhorn of the logits, hardened by Hungarian.
  Permutation candidate() const;

 private:
  friend PermutationState freeze(PermutationState state, const Permutation& candidate);

  Matrix logits_;
  double tau_;
  double gumbel_scale_;
  PermutationConfig config_;
  std::optional<Permutation> hard_;
};

/// sinkhorn(logits + gumbel noise, tau, iters). Throws StateError when frozen.
Matrix soft_assignment(const PermutationState& state, Rng& rng);

/// Throws StateError on double freeze, DomainError if candidate is not a bijection.
PermutationState freeze(PermutationState state, const Permutation& candidate);

/// Reorders a sample by an exact permutation: out[i] = sample[perm[i]].
std::vector<double> apply_permutation(const Permutation& perm, const std::vector<double>& sample);

}  // namespace bacon
