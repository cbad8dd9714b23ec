#include <gsvdnmf/nmf.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace gsvdnmf;

namespace {

NmfFactors<double> exact_rank(Index m, Index n, Index r, std::mt19937_64& eng) {
  return {oracle::uniform(m, r, eng), oracle::uniform(r, n, eng)};
}

// Multiplicative updates, used only as a reference solver.
NmfFactors<double> multiplicative(const MatrixXd& x, NmfFactors<double> f, int iters) {
  for (int it = 0; it < iters; ++it) {
    f.h.array() *= (f.w.transpose() * x).array() / ((f.w.transpose() * f.w * f.h).array() + 1e-300);
    f.w.array() *= (x * f.h.transpose()).array() / ((f.w * f.h * f.h.transpose()).array() + 1e-300);
  }
  return f;
}

}  // namespace

TEST(Objective, ExactFactorizationIsZero) {
  std::mt19937_64 eng(1);
  const auto f = exact_rank(4, 5, 2, eng);
  EXPECT_NEAR(objective(f.product(), f), 0.0, 1e-28);
  EXPECT_NEAR(relative_fitting_error(f.product(), f), 0.0, 1e-12);
}

TEST(Objective, ZeroFactors) {
  const MatrixXd x = MatrixXd::Identity(2, 2);
  const NmfFactors<double> f{MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 2)};
  EXPECT_DOUBLE_EQ(objective(x, f), 1.0);
  EXPECT_DOUBLE_EQ(relative_fitting_error(x, f), 100.0);
}

TEST(Objective, MatchesNaiveSummation) {
  std::mt19937_64 eng(2);
  const MatrixXd x = oracle::uniform(4, 5, eng);
  const auto f = exact_rank(4, 5, 2, eng);
  EXPECT_NEAR(objective(x, f), oracle::half_squared_residual(x, f.w, f.h), 1e-12);
}

TEST(Objective, Errors) {
  const NmfFactors<double> f{MatrixXd::Ones(3, 2), MatrixXd::Ones(2, 4)};
  EXPECT_THROW(objective(MatrixXd(MatrixXd::Ones(3, 5)), f), std::invalid_argument);
  EXPECT_THROW(relative_fitting_error(MatrixXd(MatrixXd::Zero(3, 4)), f), std::invalid_argument);
}

TEST(InitRandom, Deterministic) {
  const auto a = init_random<double>(7, 5, 3, 42);
  const auto b = init_random<double>(7, 5, 3, 42);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.h, b.h);
  const auto c = init_random<double>(7, 5, 3, 43);
  EXPECT_NE(a.w, c.w);
}

TEST(InitRandom, PrefixProperty) {
  for (std::uint64_t seed : {0ull, 5ull, 123456789ull}) {
    const auto big = init_random<double>(9, 6, 4, seed, 0.7);
    const auto small = init_random<double>(9, 6, 3, seed, 0.7);
    EXPECT_EQ(big.w.leftCols(3), small.w);
    EXPECT_EQ(big.h.topRows(3), small.h);
  }
}

TEST(InitRandom, ScaledBounds) {
  std::mt19937_64 eng(3);
  const MatrixXd x = oracle::uniform(10, 8, eng, 0, 5);
  const Index r = 3;
  const auto f = init_random(x, r, 9);
  const double bound = std::sqrt(x.mean() / r);
  for (const MatrixXd* m : {&f.w, &f.h})
    for (Index j = 0; j < m->cols(); ++j)
      for (Index i = 0; i < m->rows(); ++i) {
        EXPECT_GT((*m)(i, j), 0.0);
        EXPECT_LE((*m)(i, j), bound);
      }
}

TEST(InitNndsvd, NonnegativeRankOneIsExact) {
  const VectorXd a = (VectorXd(4) << 1, 0, 2, 3).finished();
  const VectorXd b = (VectorXd(3) << 0.5, 1, 0).finished();
  const MatrixXd x = a * b.transpose();
  const auto f = init_nndsvd(x, 1);
  EXPECT_LT((f.product() - x).norm(), 1e-12);
}

TEST(InitNndsvd, VariantAHasNoZeros) {
  std::mt19937_64 eng(4);
  const MatrixXd x = oracle::uniform(8, 7, eng);
  const auto f = init_nndsvd(x, 4, NndsvdVariant::a);
  EXPECT_TRUE((f.w.array() > 0).all());
  EXPECT_TRUE((f.h.array() > 0).all());
}

TEST(InitNndsvd, VariantArFillsSmallSeededValues) {
  std::mt19937_64 eng(5);
  const MatrixXd x = oracle::uniform(8, 7, eng);
  const auto plain = init_nndsvd(x, 4);
  const auto f = init_nndsvd(x, 4, NndsvdVariant::ar, 17);
  const auto g = init_nndsvd(x, 4, NndsvdVariant::ar, 17);
  EXPECT_EQ(f.w, g.w);
  EXPECT_EQ(f.h, g.h);
  const double cap = x.mean() / 100;
  for (Index j = 0; j < 4; ++j)
    for (Index i = 0; i < 8; ++i) {
      if (plain.w(i, j) == 0) {
        EXPECT_GT(f.w(i, j), 0.0);
        EXPECT_LE(f.w(i, j), cap);
      } else {
        EXPECT_EQ(f.w(i, j), plain.w(i, j));
      }
    }
}

TEST(InitNndsvd, MatchesJacobiRederivation) {
  std::mt19937_64 eng(6);
  const MatrixXd x = oracle::uniform(6, 6, eng);
  const Index r = 3;
  const auto f = init_nndsvd(x, r);
  EXPECT_TRUE((f.w.array() >= 0).all());
  EXPECT_TRUE((f.h.array() >= 0).all());
  const auto again = init_nndsvd(x, r);
  EXPECT_EQ(f.w, again.w);

  // right singular vectors from the Gram eigenproblem, left ones by x v / sigma
  const auto eig = oracle::jacobi_eigen(x.transpose() * x);
  for (Index j = 0; j < r; ++j) {
    const double sigma = std::sqrt(eig.values(j));
    const VectorXd v = eig.vectors.col(j);
    const VectorXd u = x * v / sigma;
    VectorXd wj, hj;
    if (j == 0) {
      wj = std::sqrt(sigma) * u.cwiseAbs();
      hj = std::sqrt(sigma) * v.cwiseAbs();
    } else {
      const VectorXd s = sigma * u;
      const VectorXd sp = s.cwiseMax(0), sn = (-s).cwiseMax(0), vp = v.cwiseMax(0), vn = (-v).cwiseMax(0);
      const double mp = sp.norm() * vp.norm(), mn = sn.norm() * vn.norm();
      if (mp >= mn) {
        wj = std::sqrt(mp) * sp / sp.norm();
        hj = std::sqrt(mp) * vp / vp.norm();
      } else {
        wj = std::sqrt(mn) * sn / sn.norm();
        hj = std::sqrt(mn) * vn / vn.norm();
      }
    }
    EXPECT_LT((f.w.col(j) - wj).norm(), 1e-8) << j;
    EXPECT_LT((f.h.row(j).transpose() - hj).norm(), 1e-8) << j;
  }
}

TEST(InitNndsvd, RankOutOfRange) {
  EXPECT_THROW(init_nndsvd(MatrixXd(MatrixXd::Ones(3, 4)), 4), std::invalid_argument);
  EXPECT_THROW(init_nndsvd(MatrixXd(MatrixXd::Ones(3, 4)), 0), std::invalid_argument);
}

TEST(Hals, RankOneRealizable) {
  std::mt19937_64 eng(7);
  const auto truth = exact_rank(6, 5, 1, eng);
  const MatrixXd x = truth.product();
  const auto res = run_hals(x, init_random(x, 1, 3), {1e-10, 10000, 0});
  EXPECT_LT(relative_fitting_error(x, res.factors), 1e-6);
}

TEST(Hals, RankOneReachesSvdResidual) {
  std::mt19937_64 eng(8);
  const MatrixXd x = oracle::uniform(9, 7, eng);
  const VectorXd sv = oracle::singular_values(x);
  const double svd_fit = 100 * (x.squaredNorm() - sv(0) * sv(0)) / x.squaredNorm();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto res = run_hals(x, init_random(x, 1, seed), {1e-12, 10000, 0});
    EXPECT_NEAR(relative_fitting_error(x, res.factors), svd_fit, 1e-6);
  }
}

TEST(Hals, MonotoneAgainstNaiveObjective) {
  std::mt19937_64 eng(9);
  const auto truth = exact_rank(6, 6, 3, eng);
  const MatrixXd x = truth.product();
  const auto init = init_random(x, 3, 1);
  double prev = oracle::half_squared_residual(x, init.w, init.h);
  long sweeps = 0;
  run_hals(x, init, {1e-8, 500, 0}, [&](long, const NmfFactors<double>& f) {
    const double cur = oracle::half_squared_residual(x, f.w, f.h);
    EXPECT_LE(cur, prev + 1e-10);
    EXPECT_TRUE((f.w.array() >= 0).all() && (f.h.array() >= 0).all());
    prev = cur;
    ++sweeps;
  });
  EXPECT_GT(sweeps, 1);
}

TEST(Hals, StoppingRuleHoldsAtTermination) {
  std::mt19937_64 eng(10);
  const MatrixXd x = oracle::uniform(12, 10, eng);
  const double eps = 1e-4;
  NmfFactors<double> last_two[2];
  const auto res = run_hals(x, init_random(x, 3, 4), {eps, 10000, 0}, [&](long, const NmfFactors<double>& f) {
    last_two[0] = last_two[1];
    last_two[1] = f;
  });
  ASSERT_TRUE(res.converged);
  ASSERT_GT(res.iterations, 1);
  const auto& prev = last_two[0];
  const auto& next = res.factors;
  for (Index j = 0; j < 3; ++j) {
    EXPECT_LE((next.w.col(j) - prev.w.col(j)).squaredNorm(), eps * (next.w.col(j) + prev.w.col(j)).squaredNorm());
    EXPECT_LE((next.h.row(j) - prev.h.row(j)).squaredNorm(), eps * (next.h.row(j) + prev.h.row(j)).squaredNorm());
  }
}

TEST(Hals, DefaultsFollowTheMethod) {
  const SolverSettings s;
  EXPECT_EQ(s.epsilon, 1e-4);
  EXPECT_EQ(s.max_iters, 10000);
}

TEST(Hals, ComparableToMultiplicativeOracle) {
  std::mt19937_64 eng(11);
  const auto truth = exact_rank(15, 12, 3, eng);
  const MatrixXd x = truth.product();
  const auto init = init_random(x, 3, 2);
  const auto mu = multiplicative(x, init, 5000);
  const auto hals = run_hals(x, init, {1e-10, 10000, 0});
  EXPECT_LE(relative_fitting_error(x, hals.factors), relative_fitting_error(x, mu) + 1e-6);
}

TEST(Hals, ZeroComponentIsReseeded) {
  std::mt19937_64 eng(12);
  const MatrixXd x = oracle::uniform(8, 6, eng);
  auto init = init_random(x, 3, 1);
  init.w.col(1).setZero();
  const double before = objective(x, init);
  const auto res = run_hals(x, init, {1e-4, 10000, 0});
  for (Index j = 0; j < 3; ++j) {
    EXPECT_FALSE(res.factors.w.col(j).isZero(0));
    EXPECT_FALSE(res.factors.h.row(j).isZero(0));
  }
  EXPECT_LE(res.objective, before);
}

TEST(Hals, ReseedDoesNotIncreaseObjective) {
  std::mt19937_64 eng(13);
  const MatrixXd x = oracle::uniform(8, 6, eng);
  auto f = init_random(x, 3, 1);
  f.h.row(2).setZero();
  const double before = objective(x, f);
  detail::reseed_component(x, f, 2);
  EXPECT_LE(objective(x, f), before + 1e-12);
  EXPECT_FALSE(f.h.row(2).isZero(0));
}

TEST(Hals, Errors) {
  const MatrixXd x = MatrixXd::Ones(4, 3);
  NmfFactors<double> f{MatrixXd::Ones(4, 2), MatrixXd::Ones(2, 3)};
  EXPECT_THROW(run_hals(x, NmfFactors<double>{MatrixXd::Ones(4, 2), MatrixXd::Ones(2, 4)}, {}),
               std::invalid_argument);
  EXPECT_THROW(run_hals(x, NmfFactors<double>{MatrixXd::Zero(4, 2), MatrixXd::Zero(2, 3)}, {}),
               std::invalid_argument);
  EXPECT_THROW(run_hals(x, f, {0.0, 10, 0}), std::invalid_argument);
  f.w(0, 0) = -1;
  EXPECT_THROW(run_hals(x, f, {}), std::invalid_argument);
}

TEST(Hals, IterationCapReported) {
  std::mt19937_64 eng(14);
  const MatrixXd x = oracle::uniform(10, 10, eng);
  const auto res = run_hals(x, init_random(x, 4, 1), {1e-14, 3, 0});
  EXPECT_EQ(res.iterations, 3);
  EXPECT_FALSE(res.converged);
}
