#pragma once

// HALS nonnegative matrix factorization, its initializers and error metrics.

#include <gsvdnmf/linalg.hpp>
#include <gsvdnmf/truncation.hpp>
#include <gsvdnmf/types.hpp>

#include <cstdint>
#include <functional>
#include <random>
#include <type_traits>

namespace gsvdnmf {

template <typename Scalar>
struct NmfFactors {
  Matrix<Scalar> w;  // m x r
  Matrix<Scalar> h;  // r x n

  Index rank() const { return w.cols(); }
  Matrix<Scalar> product() const { return w * h; }
};

struct SolverSettings {
  double epsilon = 1e-4;
  long max_iters = 10000;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct HalsResult {
  NmfFactors<Scalar> factors;
  long iterations = 0;
  Scalar objective = 0;
  bool converged = false;
};

template <typename Scalar>
void check_conforming(const Matrix<Scalar>& x, const NmfFactors<Scalar>& f, const char* what) {
  if (f.w.rows() != x.rows() || f.h.cols() != x.cols() || f.w.cols() != f.h.rows()) {
    throw std::invalid_argument(std::string(what) + ": factor shapes " + std::to_string(f.w.rows()) + "x" +
                                std::to_string(f.w.cols()) + " * " + std::to_string(f.h.rows()) + "x" +
                                std::to_string(f.h.cols()) + " do not conform to " + std::to_string(x.rows()) +
                                "x" + std::to_string(x.cols()));
  }
}

/// 1/2 ||x - wh||_F^2
template <typename Scalar>
Scalar objective(const Matrix<Scalar>& x, const NmfFactors<Scalar>& f) {
  check_conforming(x, f, "objective");
  return Scalar(0.5) * (x - f.w * f.h).squaredNorm();
}

/// 100 ||x - wh||_F^2 / ||x||_F^2, in percent.
template <typename Scalar>
Scalar relative_fitting_error(const Matrix<Scalar>& x, const NmfFactors<Scalar>& f) {
  check_conforming(x, f, "relative_fitting_error");
  const Scalar denom = x.squaredNorm();
  if (!(denom > 0)) throw std::invalid_argument("relative_fitting_error: input matrix is zero");
  return Scalar(100) * (x - f.w * f.h).squaredNorm() / denom;
}

namespace detail {

// Uniform on (0, 1] from the top 53 bits; independent of the standard
// library's distribution implementations.
inline double unit_uniform(std::mt19937_64& eng) {
  return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

inline std::uint64_t h_stream_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

}  // namespace detail

/// Random positive factors with entries in (0, scale]. W is drawn column by
/// column from one stream and H row by row from another, so the first r-1
/// components of a rank-r draw are bit-identical to the rank-(r-1) draw of
/// the same seed and scale.
template <typename Scalar = double>
NmfFactors<Scalar> init_random(Index m, Index n, Index r, std::uint64_t seed, Scalar scale = Scalar(1)) {
  if (m < 1 || n < 1 || r < 1) throw std::invalid_argument("init_random: dimensions must be positive");
  std::mt19937_64 weng(seed);
  std::mt19937_64 heng(detail::h_stream_seed(seed));
  NmfFactors<Scalar> f{Matrix<Scalar>(m, r), Matrix<Scalar>(r, n)};
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < m; ++i) f.w(i, j) = scale * static_cast<Scalar>(detail::unit_uniform(weng));
    for (Index i = 0; i < n; ++i) f.h(j, i) = scale * static_cast<Scalar>(detail::unit_uniform(heng));
  }
  return f;
}

template <typename Scalar>
Scalar random_init_scale(const Matrix<Scalar>& x, Index r) {
  return std::sqrt(x.mean() / static_cast<Scalar>(r));
}

/// Random init scaled by sqrt(mean(x)/r) so that WH is comparable to x.
template <typename Scalar>
NmfFactors<Scalar> init_random(const Matrix<Scalar>& x, Index r, std::uint64_t seed) {
  require_nonnegative(x, "init_random");
  return init_random<Scalar>(x.rows(), x.cols(), r, seed, random_init_scale(x, r));
}

enum class NndsvdVariant { plain, a, ar };

/// NNDSVD family. The leading triplet is used as-is (absolute values guard
/// against round-off sign noise); later triplets go through truncate_pairs
/// with s = sigma_j u_j, y = v_j^T. Variant a fills zeros with mean(x);
/// variant ar fills them with uniform values on (0, mean(x)/100].
template <typename Scalar>
NmfFactors<Scalar> init_nndsvd(const Matrix<Scalar>& x, Index r, NndsvdVariant variant = NndsvdVariant::plain,
                               std::uint64_t seed = 0) {
  if (r < 1 || r > std::min(x.rows(), x.cols())) {
    throw std::invalid_argument("init_nndsvd: rank " + std::to_string(r) + " out of range");
  }
  require_nonnegative(x, "init_nndsvd");
  const TruncatedSvd<Scalar> svd = truncated_svd(x, r);
  NmfFactors<Scalar> f{Matrix<Scalar>::Zero(x.rows(), r), Matrix<Scalar>::Zero(r, x.cols())};

  const Scalar root1 = std::sqrt(svd.sigma(0));
  f.w.col(0) = root1 * svd.u.col(0).cwiseAbs();
  f.h.row(0) = root1 * svd.v.col(0).cwiseAbs().transpose();
  if (r > 1) {
    const Matrix<Scalar> s = svd.u.rightCols(r - 1) * svd.sigma.tail(r - 1).asDiagonal();
    const Matrix<Scalar> y = svd.v.rightCols(r - 1).transpose();
    const TruncatedPairs<Scalar> t = truncate_pairs(s, y);
    f.w.rightCols(r - 1) = t.w;
    f.h.bottomRows(r - 1) = t.h;
  }

  const Scalar avg = x.mean();
  if (variant == NndsvdVariant::a) {
    f.w = f.w.unaryExpr([avg](Scalar v) { return v == 0 ? avg : v; });
    f.h = f.h.unaryExpr([avg](Scalar v) { return v == 0 ? avg : v; });
  } else if (variant == NndsvdVariant::ar) {
    std::mt19937_64 eng(seed);
    auto fill = [&](Matrix<Scalar>& m) {
      for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
          if (m(i, j) == 0) m(i, j) = avg / Scalar(100) * static_cast<Scalar>(detail::unit_uniform(eng));
    };
    fill(f.w);
    fill(f.h);
  }
  return f;
}

/// Per-component relative change test, both factors:
///   ||new - old||^2 <= eps ||new + old||^2
template <typename Scalar>
bool relative_change_converged(const NmfFactors<Scalar>& prev, const NmfFactors<Scalar>& next, double epsilon) {
  const Scalar eps = static_cast<Scalar>(epsilon);
  for (Index j = 0; j < next.rank(); ++j) {
    if ((next.w.col(j) - prev.w.col(j)).squaredNorm() > eps * (next.w.col(j) + prev.w.col(j)).squaredNorm())
      return false;
    if ((next.h.row(j) - prev.h.row(j)).squaredNorm() > eps * (next.h.row(j) + prev.h.row(j)).squaredNorm())
      return false;
  }
  return true;
}

namespace detail {

// Replace a dead component j with the best rank-1 nonnegative update of the
// residual seeded from its most positive row. The objective cannot increase.
template <typename Scalar>
void reseed_component(const Matrix<Scalar>& x, NmfFactors<Scalar>& f, Index j) {
  f.w.col(j).setZero();
  f.h.row(j).setZero();
  const Matrix<Scalar> resid = x - f.w * f.h;
  const Matrix<Scalar> pos = positive_part(resid);
  Index irow = 0;
  const Scalar best = pos.rowwise().squaredNorm().maxCoeff(&irow);
  if (best > 0) {
    const Vector<Scalar> h = pos.row(irow).transpose();
    const Vector<Scalar> w = positive_part(Vector<Scalar>(resid * h)) / h.squaredNorm();
    f.w.col(j) = w;
    f.h.row(j) = h.transpose();
    return;
  }
  // Residual is nowhere positive: keep the component alive at negligible size.
  const Scalar tiny = std::sqrt(std::numeric_limits<Scalar>::epsilon()) * std::max(x.maxCoeff(), Scalar(1)) * 1e-8;
  f.w.col(j).setConstant(tiny);
  f.h.row(j).setConstant(tiny);
}

}  // namespace detail

/// Cyclic HALS. One sweep updates every column of W (Gauss-Seidel order) and
/// then every row of H; the relative-change stopping rule is checked once per
/// sweep. `on_sweep`, when set, is called after every sweep.
template <typename Scalar>
HalsResult<Scalar> run_hals(const Matrix<Scalar>& x, NmfFactors<Scalar> f, const SolverSettings& settings,
                            const std::type_identity_t<std::function<void(long, const NmfFactors<Scalar>&)>>& on_sweep = {}) {
  check_conforming(x, f, "run_hals");
  require_nonnegative(x, "run_hals");
  require_nonnegative(f.w, "run_hals init W");
  require_nonnegative(f.h, "run_hals init H");
  if (!(settings.epsilon > 0)) throw std::invalid_argument("run_hals: epsilon must be positive");
  if (settings.max_iters < 1) throw std::invalid_argument("run_hals: max_iters must be positive");
  if (f.w.isZero(0) || f.h.isZero(0)) throw std::invalid_argument("run_hals: all-zero initialization");

  const Index r = f.rank();
  for (Index j = 0; j < r; ++j) {
    if (f.w.col(j).isZero(0) || f.h.row(j).isZero(0)) detail::reseed_component(x, f, j);
  }

  HalsResult<Scalar> out;
  for (long sweep = 1; sweep <= settings.max_iters; ++sweep) {
    const NmfFactors<Scalar> prev = f;

    Matrix<Scalar> xht = x * f.h.transpose();
    Matrix<Scalar> hht = f.h * f.h.transpose();
    for (Index j = 0; j < r; ++j) {
      f.w.col(j) = positive_part(Vector<Scalar>(f.w.col(j) + (xht.col(j) - f.w * hht.col(j)) / hht(j, j)));
      if (f.w.col(j).isZero(0)) {
        detail::reseed_component(x, f, j);
        xht.col(j) = x * f.h.row(j).transpose();
        hht.col(j) = f.h * f.h.row(j).transpose();
        hht.row(j) = hht.col(j).transpose();
      }
    }

    Matrix<Scalar> wtx = f.w.transpose() * x;
    Matrix<Scalar> wtw = f.w.transpose() * f.w;
    for (Index j = 0; j < r; ++j) {
      f.h.row(j) = positive_part(Vector<Scalar>(
                                     (f.h.row(j) + (wtx.row(j) - wtw.row(j) * f.h) / wtw(j, j)).transpose()))
                       .transpose();
      if (f.h.row(j).isZero(0)) {
        detail::reseed_component(x, f, j);
        wtx.row(j) = f.w.col(j).transpose() * x;
        wtw.col(j) = f.w.transpose() * f.w.col(j);
        wtw.row(j) = wtw.col(j).transpose();
      }
    }

    out.iterations = sweep;
    if (on_sweep) on_sweep(sweep, f);
    if (relative_change_converged(prev, f, settings.epsilon)) {
      out.converged = true;
      break;
    }
  }
  out.objective = objective(x, f);
  out.factors = std::move(f);
  return out;
}

}  // namespace gsvdnmf
