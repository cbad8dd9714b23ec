#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace gsvdnmf {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;

// Raised when an algorithm cannot produce a trustworthy answer (singular
// systems, iteration caps). Precondition violations use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.array().isFinite().all();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!all_finite(m)) {
    throw std::invalid_argument(std::string(what) + ": matrix contains NaN or Inf");
  }
}

template <typename Derived>
void require_nonnegative(const Eigen::MatrixBase<Derived>& m, const char* what) {
  require_finite(m, what);
  if ((m.array() < 0).any()) {
    throw std::invalid_argument(std::string(what) + ": matrix has negative entries");
  }
}

// max(v, 0) that never yields -0.0
template <typename Scalar>
  requires std::is_arithmetic_v<Scalar>
inline Scalar positive_part(Scalar v) {
  return v > Scalar(0) ? v : Scalar(0);
}

template <typename Derived>
auto positive_part(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  return m.unaryExpr([](Scalar v) { return positive_part(v); });
}

}  // namespace gsvdnmf
