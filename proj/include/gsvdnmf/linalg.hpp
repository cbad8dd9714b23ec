#pragma once

// Dense kernels: truncated SVD, the GSVD of a (diagonal, dense) pair, and
// Lawson-Hanson nonnegative least squares.

#include <gsvdnmf/types.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace gsvdnmf {

template <typename Scalar>
struct TruncatedSvd {
  Matrix<Scalar> u;      // m x r, orthonormal columns
  Vector<Scalar> sigma;  // r, non-increasing
  Matrix<Scalar> v;      // n x r, orthonormal columns

  Index rank() const { return sigma.size(); }
  Matrix<Scalar> reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

/// Top-r singular triplets of x. Each column of U is flipped so that its
/// largest-magnitude entry (first one on ties) is positive; V follows.
template <typename Scalar>
TruncatedSvd<Scalar> truncated_svd(const Matrix<Scalar>& x, Index r) {
  if (r < 1 || r > std::min(x.rows(), x.cols())) {
    throw std::invalid_argument("truncated_svd: rank " + std::to_string(r) + " out of range for " +
                                std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " matrix");
  }
  require_finite(x, "truncated_svd");

  Eigen::BDCSVD<Matrix<Scalar>> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd<Scalar> out{svd.matrixU().leftCols(r), svd.singularValues().head(r),
                           svd.matrixV().leftCols(r)};
  for (Index j = 0; j < r; ++j) {
    Index imax = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.u(imax, j) < 0) {
      out.u.col(j) *= Scalar(-1);
      out.v.col(j) *= Scalar(-1);
    }
  }
  return out;
}

/// Shared-Q generalized SVD of a square pair (a, b):
///   a = m1 * d1 * q^T,  b = m2 * d2 * q^T,
/// with d1 = diag(I_{r-l}, C) and d2 = [0 G; 0 0] (G in the upper-right l x l
/// block). The first r - l generalized singular values are infinite.
template <typename Scalar>
struct GsvdResult {
  Matrix<Scalar> m1;
  Matrix<Scalar> m2;
  Matrix<Scalar> q;
  Matrix<Scalar> d1;
  Matrix<Scalar> d2;
  Vector<Scalar> c;  // l
  Vector<Scalar> g;  // l, positive
  Index l = 0;

  Index size() const { return q.rows(); }
  Index infinite_count() const { return size() - l; }
};

/// Rank threshold used for the second operand of gsvd_pair.
template <typename Scalar>
Scalar gsvd_rank_tolerance(Index r, Scalar norm2) {
  return Scalar(100) * Scalar(r) * norm2 * std::numeric_limits<Scalar>::epsilon();
}

/// GSVD for the case where the first operand is diagonal with a strictly
/// positive diagonal. With T = b a^{-1} = M2 diag(t) Z^T we take M1 = Z,
/// c = 1/sqrt(1+t^2), g = t/sqrt(1+t^2) and Q^T = D1^{-1} Z^T a. Finite
/// generalized singular values c/g = 1/t are ordered largest first.
template <typename Scalar>
GsvdResult<Scalar> gsvd_pair(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  const Index r = a.rows();
  if (a.cols() != r || b.rows() != r || b.cols() != r || r == 0) {
    throw std::invalid_argument("gsvd_pair: operands must be square and of equal size");
  }
  require_finite(a, "gsvd_pair");
  require_finite(b, "gsvd_pair");
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) {
      if (i == j ? !(a(i, j) > 0) : a(i, j) != 0) {
        throw std::invalid_argument("gsvd_pair: first operand must be diagonal with positive diagonal");
      }
    }
  }

  const Vector<Scalar> bsv = Eigen::JacobiSVD<Matrix<Scalar>>(b).singularValues();
  const Scalar tol = gsvd_rank_tolerance<Scalar>(r, bsv.size() ? bsv(0) : Scalar(0));
  const Index l = (bsv.array() > tol).count();

  const Vector<Scalar> adiag = a.diagonal();
  const Matrix<Scalar> t_mat = b * adiag.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Matrix<Scalar>> tsvd(t_mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector<Scalar>& t = tsvd.singularValues();  // descending

  // Column order: the r - l null directions first, then the finite ones with
  // t ascending so that lambda = 1/t^2 comes out descending.
  std::vector<Index> order;
  order.reserve(r);
  for (Index i = l; i < r; ++i) order.push_back(i);
  for (Index i = l; i-- > 0;) order.push_back(i);

  GsvdResult<Scalar> out;
  out.l = l;
  out.m1.resize(r, r);
  out.m2.resize(r, r);
  out.d1 = Matrix<Scalar>::Zero(r, r);
  out.d2 = Matrix<Scalar>::Zero(r, r);
  out.c.resize(l);
  out.g.resize(l);

  Vector<Scalar> cdiag(r);
  for (Index pos = 0; pos < r; ++pos) {
    const Index src = order[pos];
    out.m1.col(pos) = tsvd.matrixV().col(src);
    if (pos < r - l) {
      cdiag(pos) = Scalar(1);
      // m2 ends with the left null-space directions of T
      out.m2.col(l + pos) = tsvd.matrixU().col(src);
    } else {
      const Index fi = pos - (r - l);
      const Scalar h = std::hypot(Scalar(1), t(src));
      cdiag(pos) = Scalar(1) / h;
      out.c(fi) = cdiag(pos);
      out.g(fi) = t(src) / h;
      out.m2.col(fi) = tsvd.matrixU().col(src);
      out.d2(fi, pos) = out.g(fi);
    }
    out.d1(pos, pos) = cdiag(pos);
  }
  // Q = a^T M1 D1^{-1}
  out.q = adiag.asDiagonal() * out.m1 * cdiag.cwiseInverse().asDiagonal();
  return out;
}

namespace detail {

// Lawson-Hanson active-set loop. `gradient(x)` returns A^T(b - Ax) and
// `solve(passive)` the unconstrained least-squares solution restricted to the
// passive coordinates.
template <typename Scalar, typename Gradient, typename Solve>
Vector<Scalar> active_set_nnls(Index n, Scalar tol, Gradient&& gradient, Solve&& solve) {
  Vector<Scalar> x = Vector<Scalar>::Zero(n);
  std::vector<bool> passive(n, false);
  const Index cap = 3 * n;
  Index iter = 0;

  auto passive_list = [&] {
    std::vector<Index> p;
    for (Index i = 0; i < n; ++i)
      if (passive[i]) p.push_back(i);
    return p;
  };

  Vector<Scalar> w = gradient(x);
  std::vector<bool> rejected(n, false);
  while (true) {
    Index j = -1;
    Scalar best = tol;
    for (Index i = 0; i < n; ++i) {
      if (!passive[i] && !rejected[i] && w(i) > best) {
        best = w(i);
        j = i;
      }
    }
    if (j < 0) break;
    if (++iter > cap) {
      throw NumericalError("nnls: active-set iteration cap (" + std::to_string(cap) + ") exceeded");
    }

    passive[j] = true;
    std::vector<Index> p = passive_list();
    Vector<Scalar> z = solve(p);
    const auto jpos = std::find(p.begin(), p.end(), j) - p.begin();
    if (!(z(jpos) > 0)) {
      // entering variable would be clamped straight back: skip it this round
      passive[j] = false;
      rejected[j] = true;
      continue;
    }
    std::fill(rejected.begin(), rejected.end(), false);

    // Each pass drops at least the blocking coordinate, so this terminates
    // within |passive| passes.
    while ((z.array() <= 0).any()) {
      Scalar alpha = std::numeric_limits<Scalar>::infinity();
      std::size_t blocking = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (z(k) <= 0) {
          const Scalar xi = x(p[k]);
          const Scalar step = xi / (xi - z(k));
          if (step < alpha) {
            alpha = step;
            blocking = k;
          }
        }
      }
      for (std::size_t k = 0; k < p.size(); ++k) x(p[k]) += alpha * (z(k) - x(p[k]));
      x(p[blocking]) = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (x(p[k]) <= 0) {
          x(p[k]) = 0;
          passive[p[k]] = false;
        }
      }
      p = passive_list();
      if (p.empty()) {
        z.resize(0);
        break;
      }
      z = solve(p);
    }
    x.setZero();
    for (std::size_t k = 0; k < p.size(); ++k) x(p[k]) = positive_part(z(k));
    w = gradient(x);
  }
  return x;
}

template <typename Scalar>
Matrix<Scalar> select_columns(const Matrix<Scalar>& a, const std::vector<Index>& cols) {
  Matrix<Scalar> out(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = a.col(cols[k]);
  return out;
}

}  // namespace detail

/// Lawson-Hanson NNLS: argmin_{x >= 0} ||a x - b||^2. Entering-variable ties
/// go to the lowest index. Throws NumericalError after 3n outer iterations.
template <typename Scalar>
Vector<Scalar> nnls(const Matrix<Scalar>& a, const Vector<Scalar>& b) {
  if (a.rows() < 1 || a.cols() < 1 || b.size() != a.rows()) {
    throw std::invalid_argument("nnls: dimension mismatch");
  }
  require_finite(a, "nnls");
  require_finite(b, "nnls");
  const Vector<Scalar> atb = a.transpose() * b;
  const Scalar scale = std::max(atb.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
  const Scalar tol = Scalar(1e-12) * scale;

  return detail::active_set_nnls<Scalar>(
      a.cols(), tol, [&](const Vector<Scalar>& x) -> Vector<Scalar> { return a.transpose() * (b - a * x); },
      [&](const std::vector<Index>& p) -> Vector<Scalar> {
        const Matrix<Scalar> ap = detail::select_columns(a, p);
        return ap.colPivHouseholderQr().solve(b);
      });
}

/// NNLS in normal-equation form: argmin_{x >= 0} x^T G x - 2 c^T x with G
/// symmetric positive semidefinite. Used where the design matrix would be
/// large (mn rows) but its Gram matrix is cheap to form.
template <typename Scalar>
Vector<Scalar> nnls_gram(const Matrix<Scalar>& gram, const Vector<Scalar>& rhs) {
  const Index n = gram.rows();
  if (n < 1 || gram.cols() != n || rhs.size() != n) {
    throw std::invalid_argument("nnls_gram: dimension mismatch");
  }
  require_finite(gram, "nnls_gram");
  require_finite(rhs, "nnls_gram");
  const Scalar scale = std::max(rhs.cwiseAbs().maxCoeff(), std::numeric_limits<Scalar>::min());
  const Scalar tol = Scalar(1e-10) * scale;

  return detail::active_set_nnls<Scalar>(
      n, tol, [&](const Vector<Scalar>& x) -> Vector<Scalar> { return rhs - gram * x; },
      [&](const std::vector<Index>& p) -> Vector<Scalar> {
        const Index k = static_cast<Index>(p.size());
        Matrix<Scalar> gp(k, k);
        Vector<Scalar> cp(k);
        for (Index i = 0; i < k; ++i) {
          cp(i) = rhs(p[i]);
          for (Index j = 0; j < k; ++j) gp(i, j) = gram(p[i], p[j]);
        }
        return gp.completeOrthogonalDecomposition().solve(cp);
      });
}

}  // namespace gsvdnmf
