#pragma once

// Decay-rate estimators shared by the decomposition and ergodicity checks.

#include <cstddef>
#include <span>

namespace uergo {

struct GeometricFit {
  /// Least-squares slope of log(dev_n) against n over the later half of the
  /// range; -infinity when the sequence reaches the floor and stays there.
  double slope = 0.0;
  /// First n (1-based) from which every later value is <= floor, or 0.
  std::size_t zero_from = 0;
  std::size_t points = 0;
};

/// devs[k] is the value at n = k + 1.
GeometricFit geometric_decay_fit(std::span<const double> devs, double floor);

struct PowerLawFit {
  /// Fitted exponent a in dev ~ C n^-a; +infinity when every value is <= floor.
  double exponent = 0.0;
  std::size_t points = 0;
};

/// devs[k] is the value at n = first_n + k. Fits log(dev) on log(n) over
/// n in [n_lo, n_hi], skipping values <= floor.
PowerLawFit power_law_fit(std::span<const double> devs, std::size_t first_n, std::size_t n_lo, std::size_t n_hi,
                          double floor);

}  // namespace uergo
