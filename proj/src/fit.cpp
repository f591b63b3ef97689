#include "uergo/fit.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace uergo {

namespace {

double ls_slope(std::span<const double> x, std::span<const double> y) {
  const auto m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m;
  const double my = sy / m;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx == 0.0 ? 0.0 : sxy / sxx;
}

}  // namespace

GeometricFit geometric_decay_fit(std::span<const double> devs, double floor) {
  GeometricFit fit;
  std::size_t last_above = 0;  // 1-based n
  for (std::size_t k = 0; k < devs.size(); ++k) {
    if (devs[k] > floor) last_above = k + 1;
  }
  if (last_above < devs.size()) fit.zero_from = last_above + 1;
  // Reaching numerical zero beats every geometric rate.
  if (fit.zero_from != 0 || last_above < 4) {
    fit.slope = -std::numeric_limits<double>::infinity();
    return fit;
  }
  const std::size_t lo = (last_above + 1) / 2;
  std::vector<double> xs, ys;
  for (std::size_t n = lo; n <= last_above; ++n) {
    const double v = devs[n - 1];
    if (v <= floor) continue;
    xs.push_back(static_cast<double>(n));
    ys.push_back(std::log(v));
  }
  fit.points = xs.size();
  fit.slope = xs.size() >= 2 ? ls_slope(xs, ys) : -std::numeric_limits<double>::infinity();
  return fit;
}

PowerLawFit power_law_fit(std::span<const double> devs, std::size_t first_n, std::size_t n_lo, std::size_t n_hi,
                          double floor) {
  PowerLawFit fit;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < devs.size(); ++k) {
    const std::size_t n = first_n + k;
    if (n < n_lo || n > n_hi || devs[k] <= floor) continue;
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(devs[k]));
  }
  fit.points = xs.size();
  if (xs.size() < 2) {
    fit.exponent = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.exponent = -ls_slope(xs, ys);
  return fit;
}

}  // namespace uergo
