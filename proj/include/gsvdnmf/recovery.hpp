#pragma once

// Feature recovery: compare an NMF against the truncated SVD of the same data
// through a generalized SVD, propose new components from the directions the
// NMF under-represents, and fold them into a nonnegative re-initialization.

#include <gsvdnmf/linalg.hpp>
#include <gsvdnmf/nmf.hpp>
#include <gsvdnmf/truncation.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace gsvdnmf {

template <typename Scalar>
struct LambdaSpectrum {
  Vector<Scalar> values;     // +inf for directions absent from the NMF
  std::vector<Index> order;  // descending, infinite first, ties by lower index
  Index infinite_count = 0;
  GsvdResult<Scalar> gsvd;

  Index size() const { return values.size(); }
};

template <typename Scalar>
struct SpectrumAndDirections {
  LambdaSpectrum<Scalar> spectrum;
  Matrix<Scalar> directions;  // n x r_svd, column i = V (Q^T)^{-1} e_i
};

/// Stable descending order with +inf first.
template <typename Scalar>
std::vector<Index> descending_order(const Vector<Scalar>& values) {
  std::vector<Index> order(values.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) > values(b); });
  return order;
}

/// Generalized singular value spectrum of (Sigma, U^T W0 H0 V). The SVD may
/// have more components than the NMF, in which case at least
/// svd.rank() - f.rank() values are infinite.
template <typename Scalar>
SpectrumAndDirections<Scalar> lambda_spectrum(const TruncatedSvd<Scalar>& svd, const NmfFactors<Scalar>& f) {
  const Index r0 = f.rank();
  const Index rs = svd.rank();
  if (r0 < 2) {
    throw std::invalid_argument("lambda_spectrum: NMF rank must be at least 2 (rank-1 NMF already matches the "
                                "leading singular component)");
  }
  if (rs < r0) {
    throw std::invalid_argument("lambda_spectrum: SVD rank " + std::to_string(rs) + " is below NMF rank " +
                                std::to_string(r0));
  }
  if (svd.u.rows() != f.w.rows() || svd.v.rows() != f.h.cols()) {
    throw std::invalid_argument("lambda_spectrum: SVD and NMF factor shapes do not conform");
  }

  // U^T (W0 H0) V without forming the m x n product
  const Matrix<Scalar> projected = (svd.u.transpose() * f.w) * (f.h * svd.v);
  const Matrix<Scalar> sigma = svd.sigma.asDiagonal();

  SpectrumAndDirections<Scalar> out;
  LambdaSpectrum<Scalar>& spec = out.spectrum;
  spec.gsvd = gsvd_pair<Scalar>(sigma, projected);
  const GsvdResult<Scalar>& g = spec.gsvd;
  spec.infinite_count = g.infinite_count();
  spec.values.resize(rs);
  for (Index i = 0; i < spec.infinite_count; ++i) spec.values(i) = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < g.l; ++i) {
    const Scalar ratio = g.c(i) / g.g(i);
    spec.values(spec.infinite_count + i) = ratio * ratio;
  }
  spec.order = descending_order(spec.values);

  out.directions = svd.v * g.q.transpose().partialPivLu().inverse();
  return out;
}

/// The k directions with the largest lambda, as unit-norm rows (k x n).
template <typename Scalar>
Matrix<Scalar> select_directions(const LambdaSpectrum<Scalar>& spec, const Matrix<Scalar>& directions, Index k) {
  if (k < 1 || k > spec.size()) {
    throw std::invalid_argument("select_directions: k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(spec.size()) + "]");
  }
  if (directions.cols() != spec.size()) {
    throw std::invalid_argument("select_directions: direction matrix does not match spectrum size");
  }
  Matrix<Scalar> y(k, directions.rows());
  for (Index p = 0; p < k; ++p) {
    const auto col = directions.col(spec.order[p]);
    const Scalar nrm = col.norm();
    if (!(nrm > 0)) throw NumericalError("select_directions: zero direction");
    y.row(p) = (col / nrm).transpose();
  }
  return y;
}

/// Pieces of the quadratic in (alpha, m = vec(S)) for
///   E = ||X - sum_p alpha_p w0_p h0_p^T - S Y||^2
///     = a^T Theta a - 2 xi^T a + Phi - 2 gamma^T m + 2 a^T P m + m^T Psi m.
/// Psi = (Y Y^T) kron I_m is never formed; its inverse is applied blockwise.
template <typename Scalar>
struct QuadraticForm {
  Matrix<Scalar> theta;      // r0 x r0, (W0^T W0) o (H0 H0^T)
  Vector<Scalar> xi;         // r0, w0_p^T X h0_p
  Scalar phi = 0;            // ||X||_F^2
  Matrix<Scalar> gamma_mat;  // m x k, X Y^T; gamma = vec(gamma_mat)
  Matrix<Scalar> wtw;        // W0^T W0
  Matrix<Scalar> w0;         // m x r0
  Matrix<Scalar> hy;         // r0 x k, H0 Y^T
  Matrix<Scalar> ygram;      // k x k, Y Y^T
  Eigen::LLT<Matrix<Scalar>> ygram_llt;

  Index m() const { return w0.rows(); }
  Index r0() const { return theta.rows(); }
  Index k() const { return ygram.rows(); }

  Vector<Scalar> gamma() const { return Eigen::Map<const Vector<Scalar>>(gamma_mat.data(), gamma_mat.size()); }

  /// Dense P: row p, block q is (h0_p . y_q) w0_p^T.
  Matrix<Scalar> p_dense() const {
    Matrix<Scalar> p(r0(), m() * k());
    for (Index row = 0; row < r0(); ++row)
      for (Index q = 0; q < k(); ++q) p.row(row).segment(q * m(), m()) = hy(row, q) * w0.col(row).transpose();
    return p;
  }

  /// Dense Psi, block (p, p') = (y_p . y_p') I_m.
  Matrix<Scalar> psi_dense() const {
    Matrix<Scalar> psi = Matrix<Scalar>::Zero(m() * k(), m() * k());
    for (Index a = 0; a < k(); ++a)
      for (Index b = 0; b < k(); ++b)
        psi.block(a * m(), b * m(), m(), m()).diagonal().setConstant(ygram(a, b));
    return psi;
  }

  /// Psi^{-1} v for v = vec(V), V m x k: vec(V (Y Y^T)^{-1}).
  Matrix<Scalar> psi_solve(const Matrix<Scalar>& v_mat) const {
    return ygram_llt.solve(v_mat.transpose()).transpose();
  }

  /// Theta - P Psi^{-1} P^T = (W0^T W0) o (H0 (I - Proj_Y) H0^T)
  Matrix<Scalar> reduced_matrix() const {
    if (k() == 0) return theta;
    const Matrix<Scalar> hph = hy * ygram_llt.solve(hy.transpose());
    return theta - wtw.cwiseProduct(hph);
  }

  /// xi - P Psi^{-1} gamma
  Vector<Scalar> reduced_linear() const {
    if (k() == 0) return xi;
    const Matrix<Scalar> z = psi_solve(gamma_mat);  // m x k
    const Matrix<Scalar> zh = z * hy.transpose();   // m x r0
    return xi - w0.cwiseProduct(zh).colwise().sum().transpose();
  }

  /// Phi - gamma^T Psi^{-1} gamma
  Scalar reduced_constant() const {
    if (k() == 0) return phi;
    return phi - gamma_mat.cwiseProduct(psi_solve(gamma_mat)).sum();
  }

  /// Stationary S for a given alpha: m = Psi^{-1}(gamma - P^T alpha).
  Matrix<Scalar> optimal_s(const Vector<Scalar>& alpha) const {
    if (k() == 0) return Matrix<Scalar>(m(), 0);
    const Matrix<Scalar> pta = w0 * alpha.asDiagonal() * hy;  // m x k, P^T alpha reshaped
    return psi_solve(gamma_mat - pta);
  }

  /// E(alpha) after eliminating m.
  Scalar reduced_objective(const Vector<Scalar>& alpha) const {
    return alpha.dot(reduced_matrix() * alpha) - Scalar(2) * reduced_linear().dot(alpha) + reduced_constant();
  }

  /// E(alpha, m) from the expanded pieces.
  Scalar full_objective(const Vector<Scalar>& alpha, const Matrix<Scalar>& s) const {
    Scalar e = alpha.dot(theta * alpha) - Scalar(2) * xi.dot(alpha) + phi;
    if (k() == 0) return e;
    const Matrix<Scalar> pta = w0 * alpha.asDiagonal() * hy;
    e += -Scalar(2) * gamma_mat.cwiseProduct(s).sum() + Scalar(2) * pta.cwiseProduct(s).sum() +
         (s.transpose() * s).cwiseProduct(ygram).sum();
    return e;
  }
};

/// Assemble the quadratic pieces for directions y (k x n, may be empty).
/// Throws NumericalError if Y Y^T is numerically singular.
template <typename Scalar>
QuadraticForm<Scalar> build_quadratic(const Matrix<Scalar>& x, const NmfFactors<Scalar>& f,
                                      const Matrix<Scalar>& y) {
  check_conforming(x, f, "build_quadratic");
  if (y.rows() > 0 && y.cols() != x.cols()) {
    throw std::invalid_argument("build_quadratic: directions have " + std::to_string(y.cols()) +
                                " columns, expected " + std::to_string(x.cols()));
  }
  QuadraticForm<Scalar> q;
  q.w0 = f.w;
  q.wtw = f.w.transpose() * f.w;
  q.theta = q.wtw.cwiseProduct(f.h * f.h.transpose());
  q.xi = f.w.cwiseProduct(x * f.h.transpose()).colwise().sum().transpose();
  q.phi = x.squaredNorm();
  const Index k = y.rows();
  q.ygram = y * y.transpose();
  q.gamma_mat = x * y.transpose();
  q.hy = f.h * y.transpose();
  if (k > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(q.ygram, Eigen::EigenvaluesOnly);
    const Scalar lo = es.eigenvalues().minCoeff();
    const Scalar hi = es.eigenvalues().maxCoeff();
    if (!(lo > Scalar(1e-12) * hi)) {
      throw NumericalError("solve_s_alpha: Psi is singular (selected directions are collinear); reduce k");
    }
    q.ygram_llt.compute(q.ygram);
  }
  return q;
}

template <typename Scalar>
struct SAlpha {
  Matrix<Scalar> s;      // m x k
  Vector<Scalar> alpha;  // r0, >= 0
  Scalar objective = 0;  // E at (s, alpha)
};

/// alpha = argmin_{alpha >= 0} of the reduced quadratic, then S from the
/// stationary condition.
template <typename Scalar>
SAlpha<Scalar> solve_s_alpha(const Matrix<Scalar>& x, const NmfFactors<Scalar>& f, const Matrix<Scalar>& y) {
  const QuadraticForm<Scalar> q = build_quadratic(x, f, y);
  SAlpha<Scalar> out;
  Matrix<Scalar> mat = q.reduced_matrix();
  mat = Scalar(0.5) * (mat + mat.transpose());
  out.alpha = nnls_gram<Scalar>(mat, q.reduced_linear());
  out.s = q.optimal_s(out.alpha);
  out.objective = q.full_objective(out.alpha, out.s);
  return out;
}

/// beta = argmin_{beta >= 0} ||x - sum_p beta_p w_p h_p^T||^2. The design
/// columns are vec(w_p h_p^T); the solve runs on their Gram matrix
/// (W^T W) o (H H^T) with right-hand side w_p^T x h_p.
template <typename Scalar>
Vector<Scalar> rescale_beta(const Matrix<Scalar>& x, const Matrix<Scalar>& w, const Matrix<Scalar>& h) {
  const NmfFactors<Scalar> f{w, h};
  check_conforming(x, f, "rescale_beta");
  require_nonnegative(w, "rescale_beta W");
  require_nonnegative(h, "rescale_beta H");
  const Matrix<Scalar> gram = (w.transpose() * w).cwiseProduct(h * h.transpose());
  const Vector<Scalar> rhs = w.cwiseProduct(x * h.transpose()).colwise().sum().transpose();
  return nnls_gram<Scalar>(gram, rhs);
}

template <typename Scalar>
struct AugmentedFactors {
  Matrix<Scalar> w_g;   // m x (r0 + k'), beta folded in
  Matrix<Scalar> h_g;   // (r0 + k') x n
  Vector<Scalar> beta;  // r0 + k'
  Vector<Scalar> alpha;
  LambdaSpectrum<Scalar> spectrum;
  Index dropped = 0;  // truncated pairs with no usable sign-consistent part

  NmfFactors<Scalar> factors() const { return {w_g, h_g}; }
};

/// End-to-end recovery of k new components.
template <typename Scalar>
AugmentedFactors<Scalar> recover(const Matrix<Scalar>& x, const NmfFactors<Scalar>& f,
                                 const TruncatedSvd<Scalar>& svd, Index k) {
  check_conforming(x, f, "recover");
  require_nonnegative(x, "recover");
  const SpectrumAndDirections<Scalar> sd = lambda_spectrum(svd, f);
  const Matrix<Scalar> y = select_directions(sd.spectrum, sd.directions, k);
  const SAlpha<Scalar> sa = solve_s_alpha(x, f, y);
  const TruncatedPairs<Scalar> tp = truncate_pairs(sa.s, y);

  const Index r0 = f.rank();
  Index kept = 0;
  for (bool z : tp.zero) kept += z ? 0 : 1;

  Matrix<Scalar> w(x.rows(), r0 + kept);
  Matrix<Scalar> h(r0 + kept, x.cols());
  w.leftCols(r0) = f.w * sa.alpha.asDiagonal();
  h.topRows(r0) = f.h;
  Index pos = r0;
  for (Index j = 0; j < k; ++j) {
    if (tp.zero[j]) continue;
    w.col(pos) = tp.w.col(j);
    h.row(pos) = tp.h.row(j);
    ++pos;
  }

  AugmentedFactors<Scalar> out;
  out.beta = rescale_beta(x, w, h);
  out.w_g = w * out.beta.asDiagonal();
  out.h_g = std::move(h);
  out.alpha = sa.alpha;
  out.spectrum = sd.spectrum;
  out.dropped = k - kept;
  return out;
}

}  // namespace gsvdnmf
