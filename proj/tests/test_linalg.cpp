#include <gsvdnmf/linalg.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace gsvdnmf;

namespace {

VectorXd vec(std::initializer_list<double> v) { return Eigen::Map<const VectorXd>(v.begin(), v.size()); }

double rel_err(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

void expect_gsvd_identities(const MatrixXd& a, const MatrixXd& b, const GsvdResult<double>& g) {
  const Index r = a.rows();
  EXPECT_LT(rel_err(g.m1 * g.d1 * g.q.transpose(), a), 1e-8);
  if (b.norm() > 0) {
    EXPECT_LT(rel_err(g.m2 * g.d2 * g.q.transpose(), b), 1e-8);
  } else {
    EXPECT_EQ((g.m2 * g.d2 * g.q.transpose()).norm(), 0.0);
  }
  EXPECT_LT((g.m1.transpose() * g.m1 - MatrixXd::Identity(r, r)).norm(), 1e-10);
  EXPECT_LT((g.m2.transpose() * g.m2 - MatrixXd::Identity(r, r)).norm(), 1e-10);
  for (Index i = 0; i < g.l; ++i) EXPECT_NEAR(g.c(i) * g.c(i) + g.g(i) * g.g(i), 1.0, 1e-12);
}

}  // namespace

TEST(TruncatedSvd, DiagonalInput) {
  const MatrixXd x = vec({3, 2, 1}).asDiagonal();
  const auto svd = truncated_svd(x, 2);
  EXPECT_NEAR(svd.sigma(0), 3, 1e-14);
  EXPECT_NEAR(svd.sigma(1), 2, 1e-14);
  EXPECT_LT((svd.u - MatrixXd::Identity(3, 2)).norm(), 1e-14);
  EXPECT_LT((svd.v - MatrixXd::Identity(3, 2)).norm(), 1e-14);
}

TEST(TruncatedSvd, RankOneOuterProduct) {
  const VectorXd a = vec({1, 2, 0.5, 3});
  const VectorXd b = vec({2, 1, 4});
  const auto svd = truncated_svd(MatrixXd(a * b.transpose()), 1);
  EXPECT_NEAR(svd.sigma(0), a.norm() * b.norm(), 1e-12);
  EXPECT_LT((svd.u.col(0) - a.normalized()).norm(), 1e-12);
  EXPECT_LT((svd.v.col(0) - b.normalized()).norm(), 1e-12);
}

TEST(TruncatedSvd, TailMatchesJacobiOracle) {
  std::mt19937_64 eng(11);
  const MatrixXd x = oracle::uniform(8, 6, eng);
  const VectorXd sv = oracle::singular_values(x);
  const auto svd = truncated_svd(x, 3);
  const double tail = std::sqrt(sv.tail(3).squaredNorm());
  EXPECT_NEAR((x - svd.reconstruct()).norm(), tail, 1e-8);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(svd.sigma(i), sv(i), 1e-10);
}

TEST(TruncatedSvd, ErrorNonIncreasingInRank) {
  std::mt19937_64 eng(12);
  const MatrixXd x = oracle::uniform(7, 9, eng);
  double prev = std::numeric_limits<double>::infinity();
  for (Index r = 1; r <= 7; ++r) {
    const double e = (x - truncated_svd(x, r).reconstruct()).norm();
    EXPECT_LE(e, prev + 1e-12);
    prev = e;
  }
}

TEST(TruncatedSvd, SignConvention) {
  std::mt19937_64 eng(13);
  const MatrixXd x = oracle::gaussian(6, 5, eng);
  const auto svd = truncated_svd(x, 4);
  for (Index j = 0; j < 4; ++j) {
    Index imax = 0;
    svd.u.col(j).cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(svd.u(imax, j), 0);
  }
  const auto again = truncated_svd(x, 4);
  EXPECT_EQ(svd.u, again.u);
  EXPECT_EQ(svd.v, again.v);
}

TEST(TruncatedSvd, Errors) {
  const MatrixXd x = MatrixXd::Ones(3, 4);
  EXPECT_THROW(truncated_svd(x, 0), std::invalid_argument);
  EXPECT_THROW(truncated_svd(x, 4), std::invalid_argument);
  MatrixXd bad = x;
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(truncated_svd(bad, 1), std::invalid_argument);
}

TEST(GsvdPair, IdenticalOperands) {
  const MatrixXd a = vec({2, 1}).asDiagonal();
  const auto g = gsvd_pair(a, a);
  EXPECT_EQ(g.l, 2);
  for (Index i = 0; i < 2; ++i) EXPECT_NEAR(g.c(i) / g.g(i), 1.0, 1e-12);
  expect_gsvd_identities(a, a, g);
}

TEST(GsvdPair, ZeroSecondOperand) {
  const MatrixXd a = MatrixXd::Identity(2, 2);
  const MatrixXd b = MatrixXd::Zero(2, 2);
  const auto g = gsvd_pair(a, b);
  EXPECT_EQ(g.l, 0);
  EXPECT_EQ(g.infinite_count(), 2);
  EXPECT_LT((g.d1 - MatrixXd::Identity(2, 2)).norm(), 1e-15);
  EXPECT_EQ(g.d2.norm(), 0.0);
  expect_gsvd_identities(a, b, g);
}

TEST(GsvdPair, FullRankMatchesPencilOracle) {
  std::mt19937_64 eng(21);
  const MatrixXd a = vec({3, 2, 1}).asDiagonal();
  const MatrixXd b = oracle::gaussian(3, 3, eng);
  const auto g = gsvd_pair(a, b);
  EXPECT_EQ(g.l, 3);
  expect_gsvd_identities(a, b, g);
  // full rank: D1 = diag(C), D2 = diag(G)
  EXPECT_LT((g.d1 - MatrixXd(g.c.asDiagonal())).norm(), 1e-15);
  EXPECT_LT((g.d2 - MatrixXd(g.g.asDiagonal())).norm(), 1e-15);
  const auto ref = oracle::pencil_lambdas(a, b);
  ASSERT_EQ(ref.size(), 3u);
  for (Index i = 0; i < 3; ++i) {
    const double lam = g.c(i) * g.c(i) / (g.g(i) * g.g(i));
    EXPECT_LT(oracle::rel_diff(lam, ref[i]), 1e-6) << i;
  }
}

TEST(GsvdPair, RankDeficientSecondOperand) {
  std::mt19937_64 eng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const Index r = 5, rank = 2 + trial % 3;
    const MatrixXd a = oracle::uniform(r, 1, eng, 0.5, 3.0).col(0).asDiagonal();
    const MatrixXd b = oracle::gaussian(r, rank, eng) * oracle::gaussian(rank, r, eng);
    const auto g = gsvd_pair(a, b);
    EXPECT_EQ(g.l, rank);
    EXPECT_EQ(g.infinite_count(), r - rank);
    expect_gsvd_identities(a, b, g);
    const auto ref = oracle::pencil_lambdas(a, b);
    ASSERT_EQ(static_cast<Index>(ref.size()), rank);
    for (Index i = 0; i < rank; ++i)
      EXPECT_LT(oracle::rel_diff(g.c(i) * g.c(i) / (g.g(i) * g.g(i)), ref[i]), 1e-6);
    // infinite directions come first: zero columns in D2
    EXPECT_EQ(g.d2.leftCols(r - rank).norm(), 0.0);
  }
}

TEST(GsvdPair, Errors) {
  const MatrixXd a = MatrixXd::Identity(2, 2);
  EXPECT_THROW(gsvd_pair(a, MatrixXd(MatrixXd::Zero(3, 3))), std::invalid_argument);
  MatrixXd nondiag = a;
  nondiag(0, 1) = 0.1;
  EXPECT_THROW(gsvd_pair(nondiag, a), std::invalid_argument);
  MatrixXd nonpos = a;
  nonpos(1, 1) = 0;
  EXPECT_THROW(gsvd_pair(nonpos, a), std::invalid_argument);
}

TEST(Nnls, ClampedIdentity) {
  const VectorXd x = nnls<double>(MatrixXd::Identity(3, 3), vec({1, -2, 3}));
  EXPECT_EQ(x, vec({1, 0, 3}));
}

TEST(Nnls, FeasibleExactSolution) {
  std::mt19937_64 eng(31);
  const MatrixXd a = oracle::gaussian(8, 4, eng);
  const VectorXd xs = vec({0.5, 0, 2, 1});
  const VectorXd x = nnls<double>(a, a * xs);
  EXPECT_LT((x - xs).norm(), 1e-10);
}

TEST(Nnls, MatchesEnumerationOracle) {
  std::mt19937_64 eng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd a = oracle::gaussian(5, 3, eng);
    const VectorXd b = oracle::gaussian(5, 1, eng);
    VectorXd xo;
    const double ref = oracle::nnls_objective(a, b, &xo);
    const VectorXd x = nnls<double>(a, b);
    EXPECT_TRUE((x.array() >= 0).all());
    EXPECT_NEAR((a * x - b).squaredNorm(), ref, 1e-8);
    EXPECT_LT((x - xo).norm(), 1e-8);
  }
}

TEST(Nnls, KktConditions) {
  std::mt19937_64 eng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const MatrixXd a = oracle::gaussian(10, 6, eng);
    const VectorXd b = oracle::gaussian(10, 1, eng);
    const VectorXd x = nnls<double>(a, b);
    const VectorXd grad = a.transpose() * (a * x - b);
    const double tol = 1e-8 * (a.transpose() * b).cwiseAbs().maxCoeff();
    for (Index i = 0; i < x.size(); ++i) {
      ASSERT_GE(x(i), 0.0);
      if (x(i) == 0) EXPECT_GE(grad(i), -tol);
      else EXPECT_NEAR(grad(i), 0.0, tol);
    }
    EXPECT_LE((a * x - b).squaredNorm(), b.squaredNorm() + 1e-12);
  }
}

TEST(Nnls, GramFormMatchesOracle) {
  std::mt19937_64 eng(34);
  for (int trial = 0; trial < 30; ++trial) {
    const MatrixXd a = oracle::gaussian(7, 5, eng);
    const MatrixXd g = a.transpose() * a;
    const VectorXd c = oracle::gaussian(5, 1, eng);
    const VectorXd x = nnls_gram<double>(g, c);
    EXPECT_TRUE((x.array() >= 0).all());
    EXPECT_NEAR(0.5 * x.dot(g * x) - c.dot(x), oracle::nnls_gram_objective(g, c), 1e-8);
  }
}

TEST(Nnls, DimensionMismatch) {
  EXPECT_THROW(nnls<double>(MatrixXd::Identity(3, 2), VectorXd::Ones(2)), std::invalid_argument);
  EXPECT_THROW(nnls_gram<double>(MatrixXd::Identity(3, 3), VectorXd::Ones(2)), std::invalid_argument);
}

TEST(FloatInstantiation, Compiles) {
  const Eigen::MatrixXf x = Eigen::MatrixXf::Random(5, 4).cwiseAbs();
  const auto svd = truncated_svd<float>(x, 2);
  EXPECT_EQ(svd.rank(), 2);
  const auto v = nnls<float>(x, Eigen::VectorXf::Ones(5));
  EXPECT_TRUE((v.array() >= 0).all());
}
