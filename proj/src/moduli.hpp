#pragma once

// Entrywise moduli via sqrt(re^2 + im^2): vectorizes, unlike std::abs, but
// the squares under/overflow outside roughly [1e-154, 1e154]. Reductions
// that land outside the safe range are recomputed on a rescaled copy.

#include <cmath>

#include <Eigen/Dense>

namespace uergo::detail {

template <class Derived, class Reduce>
double reduce_moduli(const Eigen::MatrixBase<Derived>& m, Reduce reduce) {
  if (m.size() == 0) return 0.0;
  const double fast = reduce(m.cwiseAbs2().cwiseSqrt());
  if (fast >= 1e-140 && fast <= 1e140) return fast;
  const double scale = std::max(m.real().cwiseAbs().maxCoeff(), m.imag().cwiseAbs().maxCoeff());
  if (scale == 0.0 || !std::isfinite(scale)) return fast;
  return scale * reduce((m / scale).cwiseAbs2().cwiseSqrt());
}

inline double max_row_sum(const Eigen::MatrixXcd& m) {
  return reduce_moduli(m, [](const auto& a) { return a.rowwise().sum().maxCoeff(); });
}

}  // namespace uergo::detail
