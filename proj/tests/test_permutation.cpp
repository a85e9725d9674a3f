#include <cmath>
#include <numbers>

#include "bacon/error.hpp"
#include "bacon/permutation.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bacon;

namespace {

Matrix random_matrix(Rng& rng, std::size_t n, double lo, double hi) {
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng, lo, hi);
  }
  return m;
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
  }
  return rows;
}

void check_doubly_stochastic(const Matrix& p, double tol) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) <= tol);
  for (Eigen::Index j = 0; j < p.cols(); ++j) CHECK(std::abs(p.col(j).sum() - 1.0) <= tol);
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.maxCoeff() < 1.0 + 1e-12);
}

}  // namespace

TEST_CASE("sample_gumbel") {
  Rng a(1), b(1);
  CHECK(sample_gumbel(4, 0.0, a).isZero());
  Rng c(42), d(42);
  CHECK(sample_gumbel(5, 1.3, c) == sample_gumbel(5, 1.3, d));

  Rng e(9), f(9);
  const Matrix unit = sample_gumbel(6, 1.0, e);
  const Matrix scaled = sample_gumbel(6, 2.5, f);
  CHECK((scaled - 2.5 * unit).cwiseAbs().maxCoeff() < 1e-12);

  Rng g(2024);
  double sum = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < 1000; ++r) {
    const Matrix m = sample_gumbel(10, 1.0, g);
    sum += m.sum();
    count += 100;
  }
  CHECK(std::abs(sum / static_cast<double>(count) - std::numbers::egamma) < 0.02);
}

TEST_CASE("sinkhorn") {
  SUBCASE("dominant diagonal gives near identity") {
    Matrix m = Matrix::Constant(4, 4, 0.1);
    m.diagonal().setConstant(10.0);
    const Matrix p = sinkhorn(m, 1.0, 20);
    check_doubly_stochastic(p, 1e-6);
    CHECK(p.diagonal().minCoeff() > 0.99);
  }
  SUBCASE("doubly stochastic on random inputs") {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = 2 + rng() % 9;
      const Matrix p = sinkhorn(random_matrix(rng, n, -1.0, 1.0), 1.0, 20);
      check_doubly_stochastic(p, 1e-6);
    }
  }
  SUBCASE("low temperature concentrates on the optimal assignment") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const Matrix m = random_matrix(rng, 5, 0.0, 1.0);
      const Permutation best = hungarian(m);
      const Matrix p = sinkhorn(m, 0.01, 200);
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::Index arg = 0;
        p.row(i).maxCoeff(&arg);
        CHECK(static_cast<std::size_t>(arg) == best[static_cast<std::size_t>(i)]);
      }
    }
  }
  SUBCASE("convex mixture keeps truth values in range") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
      const Matrix p = sinkhorn(random_matrix(rng, 6, -2.0, 2.0), 0.5, 20);
      Eigen::VectorXd x(6);
      for (Eigen::Index i = 0; i < 6; ++i) x(i) = uniform_open01(rng);
      const Eigen::VectorXd y = p * x;
      CHECK(y.minCoeff() >= 0.0);
      CHECK(y.maxCoeff() <= 1.0 + 1e-9);
    }
  }
  SUBCASE("errors") {
    Matrix bad = Matrix::Zero(3, 3);
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(sinkhorn(bad, 1.0, 20), NumericError);
    CHECK_THROWS_AS(sinkhorn(Matrix::Zero(3, 3), 0.0, 20), DomainError);
    CHECK_THROWS_AS(sinkhorn(Matrix::Zero(3, 3), 1.0, 0), DomainError);
  }
}

TEST_CASE("sinkhorn backward matches central differences") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng() % 5;
    const Matrix m = random_matrix(rng, n, -1.0, 1.0);
    const Matrix weights = random_matrix(rng, n, -1.0, 1.0);
    const double tau = uniform(rng, 0.3, 1.5);
    const SinkhornTrace trace(m, tau, 20);
    const Matrix grad = trace.backward(weights);
    auto objective = [&](const Matrix& x) { return sinkhorn(x, tau, 20).cwiseProduct(weights).sum(); };
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Matrix up = m, down = m;
        up(i, j) += h;
        down(i, j) -= h;
        const double fd = (objective(up) - objective(down)) / (2.0 * h);
        CHECK(oracle::relative_error(grad(i, j), fd, 1e-6) < 1e-5);
      }
    }
  }
}

TEST_CASE("hungarian") {
  SUBCASE("worked example") {
    Matrix m(3, 3);
    m << 1, 2, 3, 3, 1, 2, 2, 3, 1;
    const Permutation p = hungarian(m);
    CHECK(p == Permutation{2, 0, 1});
    CHECK(oracle::assignment_value(to_rows(m), p) == 9.0);
  }
  SUBCASE("identity dominant") {
    Matrix m = Matrix::Constant(6, 6, 0.2);
    m.diagonal().setConstant(5.0);
    CHECK(hungarian(m) == identity_permutation(6));
  }
  SUBCASE("ties break toward lower columns for earlier rows") {
    CHECK(hungarian(Matrix::Zero(4, 4)) == identity_permutation(4));
  }
  SUBCASE("equals exhaustive search") {
    Rng rng(7);
    for (std::size_t n = 1; n <= 7; ++n) {
      for (int t = 0; t < 100; ++t) {
        const Matrix m = random_matrix(rng, n, -5.0, 5.0);
        const Permutation p = hungarian(m);
        REQUIRE(is_permutation(p, n));
        const auto rows = to_rows(m);
        CHECK(std::abs(oracle::assignment_value(rows, p) -
                       oracle::assignment_value(rows, oracle::best_assignment(rows))) < 1e-9);
      }
    }
  }
  SUBCASE("non-finite input") {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 2) = INFINITY;
    CHECK_THROWS_AS(hungarian(m), NumericError);
  }
}

TEST_CASE("permutation state") {
  PermutationConfig cfg;
  Rng rng(8);
  PermutationState s = PermutationState::initial(5, cfg, rng);
  CHECK(s.size() == 5);
  CHECK(s.logits().cwiseAbs().maxCoeff() <= cfg.logit_init);
  CHECK(s.tau() == cfg.tau0);
  CHECK(s.gumbel_scale() == cfg.gumbel_max);
  CHECK_FALSE(s.frozen());
  CHECK_THROWS_AS(s.hard(), StateError);

  s.set_gumbel_scale(100.0);
  CHECK(s.gumbel_scale() == cfg.gumbel_max);
  s.set_gumbel_scale(0.0);
  CHECK(s.gumbel_scale() == cfg.gumbel_min);
  CHECK_THROWS_AS(s.set_tau(0.0), DomainError);

  Rng r1(10), r2(10);
  CHECK(soft_assignment(s, r1) == soft_assignment(s, r2));
  Rng r3(11);
  check_doubly_stochastic(soft_assignment(s, r3), 1e-6);

  CHECK_THROWS_AS(freeze(s, Permutation{0, 1, 1, 2, 3}), DomainError);
  PermutationState f = freeze(s, identity_permutation(5));
  CHECK(f.frozen());
  CHECK(f.hard() == identity_permutation(5));
  CHECK_THROWS_AS(soft_assignment(f, rng), StateError);
  CHECK_THROWS_AS(freeze(f, identity_permutation(5)), StateError);

  const std::vector<double> sample{0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK(apply_permutation(f.hard(), sample) == sample);
  CHECK(apply_permutation(Permutation{4, 3, 2, 1, 0}, sample) == std::vector<double>{0.5, 0.4, 0.3, 0.2, 0.1});
}

TEST_CASE("near-zero noise soft assignment follows dominant logits") {
  PermutationConfig cfg;
  cfg.gumbel_min = 0.0;
  Matrix logits = Matrix::Zero(4, 4);
  logits.diagonal().setConstant(20.0);
  PermutationState s(logits, 1.0, 0.0, cfg);
  Rng rng(12);
  CHECK(soft_assignment(s, rng).diagonal().minCoeff() > 0.999);
  CHECK(s.candidate() == identity_permutation(4));
}

TEST_CASE("uniform helpers") {
  Rng rng(13);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform_open01(rng);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    CHECK(uniform_index(rng, 7) < 7);
  }
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}
