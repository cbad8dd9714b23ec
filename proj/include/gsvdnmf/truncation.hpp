#pragma once

#include <gsvdnmf/types.hpp>

#include <vector>

namespace gsvdnmf {

template <typename Scalar>
struct TruncatedPairs {
  Matrix<Scalar> w;        // m x k, >= 0
  Matrix<Scalar> h;        // k x n, >= 0
  std::vector<bool> zero;  // pair j had no usable sign-consistent part
};

/// NNDSVD truncation: each rank-1 pair (s_j, y_j) is replaced by whichever of
/// (s+, y+) and (s-, y-) carries the larger product of norms mu, rescaled so
/// that w_j h_j = mu * unit(s_part) * unit(y_part)^T. Ties go to the positive
/// pair. s is m x k, y is k x n (rows are the directions).
template <typename Scalar>
TruncatedPairs<Scalar> truncate_pairs(const Matrix<Scalar>& s, const Matrix<Scalar>& y) {
  if (s.cols() != y.rows()) {
    throw std::invalid_argument("truncate_pairs: s has " + std::to_string(s.cols()) + " columns but y has " +
                                std::to_string(y.rows()) + " rows");
  }
  const Index k = s.cols();
  TruncatedPairs<Scalar> out{Matrix<Scalar>::Zero(s.rows(), k), Matrix<Scalar>::Zero(k, y.cols()),
                             std::vector<bool>(k, false)};
  for (Index j = 0; j < k; ++j) {
    const Vector<Scalar> sp = positive_part(s.col(j));
    const Vector<Scalar> sn = positive_part(Vector<Scalar>(-s.col(j)));
    const Vector<Scalar> yp = positive_part(y.row(j).transpose());
    const Vector<Scalar> yn = positive_part(Vector<Scalar>(-y.row(j).transpose()));
    const Scalar nsp = sp.norm(), nsn = sn.norm(), nyp = yp.norm(), nyn = yn.norm();
    const Scalar mu_pos = nsp * nyp;
    const Scalar mu_neg = nsn * nyn;

    const bool keep_pos = mu_pos >= mu_neg;
    const Scalar mu = keep_pos ? mu_pos : mu_neg;
    if (!(mu > 0)) {
      out.zero[j] = true;
      continue;
    }
    const Scalar root = std::sqrt(mu);
    if (keep_pos) {
      out.w.col(j) = (root / nsp) * sp;
      out.h.row(j) = ((root / nyp) * yp).transpose();
    } else {
      out.w.col(j) = (root / nsn) * sn;
      out.h.row(j) = ((root / nyn) * yn).transpose();
    }
  }
  return out;
}

}  // namespace gsvdnmf
