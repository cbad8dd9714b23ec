#include <gsvdnmf/pipeline.hpp>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace gsvdnmf {

namespace {

double standard_normal(std::mt19937_64& eng) {
  // Box-Muller on our own uniforms keeps datasets identical across standard libraries
  const double u1 = detail::unit_uniform(eng);
  const double u2 = detail::unit_uniform(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double bump(double pos, double center, double width) {
  const double z = (pos - center) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

SyntheticData gen_synthetic(Index n_features, Index m, Index n, double noise_level, std::uint64_t seed) {
  if (n_features < 2) throw std::invalid_argument("gen_synthetic: need at least 2 features");
  if (m < 2 * n_features || n < 2 * n_features) throw std::invalid_argument("gen_synthetic: matrix too small");
  if (!(noise_level >= 0)) throw std::invalid_argument("gen_synthetic: noise level must be nonnegative");

  SyntheticData d;
  d.w.resize(m, n_features);
  d.h.resize(n_features, n);

  // Evenly spaced centers; H centers are visited in a strided order so that
  // neighbouring W bumps pair with distant H bumps. Two pairs are then pulled
  // within 1.5 widths of each other: features 1 and 2 in W, features f-3 and
  // f-2 in H. Each pair stays separable through its other factor.
  const double wstep = static_cast<double>(m) / static_cast<double>(n_features);
  const double hstep = static_cast<double>(n) / static_cast<double>(n_features);
  const double wwidth = 0.3 * wstep;
  const double hwidth = 0.3 * hstep;
  Index stride = 3;
  while (std::gcd(stride, n_features) != 1) ++stride;
  std::vector<double> wc(n_features), hc(n_features);
  for (Index i = 0; i < n_features; ++i) {
    wc[i] = (static_cast<double>(i) + 0.5) * wstep;
    hc[i] = (static_cast<double>((i * stride) % n_features) + 0.5) * hstep;
  }
  if (n_features > 2) wc[2] = wc[1] + 1.5 * wwidth;
  const Index a = n_features - 3, b = n_features - 2;
  if (a > 2) hc[b] = hc[a] + 1.5 * hwidth;

  for (Index j = 0; j < n_features; ++j) {
    for (Index i = 0; i < m; ++i) d.w(i, j) = bump(static_cast<double>(i), wc[j], wwidth);
    for (Index i = 0; i < n; ++i) d.h(j, i) = bump(static_cast<double>(i), hc[j], hwidth);
  }

  d.x = d.w * d.h;
  if (noise_level > 0) {
    std::mt19937_64 eng(seed);
    const double amp = noise_level * d.x.maxCoeff();
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) d.x(i, j) += amp * std::abs(standard_normal(eng));
  }
  return d;
}

}  // namespace gsvdnmf
