#include "uergo/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/QR>

#include "uergo/error.hpp"
#include "uergo/fit.hpp"
#include "uergo/latops.hpp"
#include "moduli.hpp"

namespace uergo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kProjectionTol = 1e-8;
constexpr double kRankGap = 1e-6;
constexpr std::size_t kMaxNodes = 4096;
constexpr int kMaxEscalations = 3;

double phase_turns(Complex z) {
  double turns = std::arg(z) / kTwoPi;
  if (turns < 0.0) turns += 1.0;
  return turns;
}

// Numerator a of the detected root e^{2 pi i a / q}.
std::uint64_t root_numerator(Complex z, std::uint64_t q) {
  const auto a = static_cast<std::uint64_t>(std::llround(phase_turns(z) * static_cast<double>(q)));
  return a % q;
}

PeripheralSpectrum split(const SpectrumReport& report, double tol, bool strict) {
  if (std::abs(report.spectral_radius - 1.0) > 1e-8) {
    throw Error(ErrorKind::InvalidHypothesis,
                "spectral radius " + std::to_string(report.spectral_radius) + " is not 1 (tolerance 1e-8)");
  }
  PeripheralSpectrum ps;
  ps.dimension = report.dimension;
  ps.spectral_radius = report.spectral_radius;
  for (const auto& sv : report.distinct) {
    const double mod = std::abs(sv.value);
    if (mod >= 1.0 - tol) {
      ps.values.push_back(sv.value);
      ps.orders.push_back(root_of_unity_order(sv.value, report.dimension));
      if (strict && !ps.orders.back()) {
        throw Error(ErrorKind::NotRootOfUnity, "peripheral eigenvalue (" + std::to_string(sv.value.real()) + ", " +
                                                   std::to_string(sv.value.imag()) +
                                                   ") is not a root of unity of order <= " +
                                                   std::to_string(report.dimension));
      }
    } else {
      ps.interior_radius = std::max(ps.interior_radius, mod);
      ps.interior_count += sv.algebraic_multiplicity;
    }
  }
  return ps;
}

// Orthonormal basis of range(m) for a projection m. The rank is the trace
// (an integer for a projection, and insensitive to the quadrature error that
// a relative pivot cut at 1e-10 would trip on); the pivoted QR must show a
// clear gap at that rank.
CDense range_basis(const CDense& m, const char* what) {
  const Complex trace = m.trace();
  const double rounded = std::round(trace.real());
  if (std::abs(trace - Complex{rounded, 0.0}) > 1e-6) {
    throw Error(ErrorKind::TheoremViolation, std::string("trace of ") + what + " is not an integer");
  }
  const auto rank = static_cast<Eigen::Index>(rounded);
  if (rank == 0) return CDense(m.rows(), 0);
  Eigen::ColPivHouseholderQR<CDense> qr(m);
  const auto pivots = qr.matrixQR().diagonal().cwiseAbs();
  const double top = pivots(0);
  if (pivots(rank - 1) <= kRankGap * top || (rank < pivots.size() && pivots(rank) > kRankGap * top)) {
    throw Error(ErrorKind::TheoremViolation, std::string("rank of ") + what + " is not resolved at its trace");
  }
  CDense q = qr.householderQ();
  return q.leftCols(rank);
}

double sup_norm(const CDense& m) { return detail::max_row_sum(m); }

std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> primes;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p != 0) continue;
    primes.push_back(p);
    while (n % p == 0) n /= p;
  }
  if (n > 1) primes.push_back(n);
  return primes;
}

double periodicity_residual(const ComplexMatrix& t, std::uint64_t k, const CDense& q) {
  return max_abs(power_apply(t, k, q) - q);
}

// Coordinates outside every cycle whose geometric-mean weight is 1: the
// support of the stable ideal predicted by the cycle structure.
std::vector<std::size_t> oracle_stab_support(const WeightedCompositionOperator& w) {
  const auto cs = cycle_structure(w.map());
  std::vector<bool> peripheral(w.size(), false);
  for (const auto& cycle : cs.cycles) {
    double log_sum = 0.0;
    bool zero = false;
    for (State s : cycle.states) {
      if (w.weights()[s] == 0.0) {
        zero = true;
        break;
      }
      log_sum += std::log(w.weights()[s]);
    }
    if (zero || std::abs(std::exp(log_sum / static_cast<double>(cycle.length())) - 1.0) > 1e-6) continue;
    for (State s : cycle.states) peripheral[s] = true;
  }
  std::vector<std::size_t> support;
  for (std::size_t x = 0; x < w.size(); ++x) {
    if (!peripheral[x]) support.push_back(x);
  }
  return support;
}

// Contour projection at the chosen radius. Eigenvalues alone do not see the
// resolvent growth of long nilpotent chains, which can make the midpoint
// contour rounding-limited; the radius then moves halfway toward 1 while the
// annulus stays resolvable. The same cancellation can leave P idempotent to
// 1e-8 but off in T^N (I - P) = I - P, so that residual also escalates.
ContourProjection projection_with_escalation(const ComplexMatrix& t, Decomposition& d) {
  const double ir = d.peripheral.interior_radius;
  std::uint64_t n_period = 1;
  for (const auto& o : d.peripheral.orders) n_period = lcm_checked(n_period, o.value_or(1));
  const auto n = static_cast<Eigen::Index>(t.size());
  for (int attempt = 0;; ++attempt) {
    const double next = (d.contour_radius + 1.0) / 2.0;
    const bool can_escalate = attempt < kMaxEscalations &&
                              std::pow(std::max(ir / next, next), static_cast<double>(kMaxNodes)) <= 1e-12;
    const std::size_t nodes = quadrature_nodes_for(ir, d.contour_radius);
    try {
      auto cp = contour_projection(t, d.contour_radius, nodes, 0.0, d.spectrum.eigenvalues);
      if (!can_escalate) return cp;
      const CDense q = CDense::Identity(n, n) - cp.projection;
      if (periodicity_residual(t, n_period, q) <= kProjectionTol) return cp;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::QuadratureFailure || !can_escalate) throw;
    }
    d.contour_radius = next;
  }
}

}  // namespace

bool PeripheralSpectrum::all_orders_detected() const {
  return std::all_of(orders.begin(), orders.end(), [](const auto& o) { return o.has_value(); });
}

std::optional<std::uint64_t> root_of_unity_order(Complex z, std::uint64_t max_order, double phase_tol) {
  const double turns = phase_turns(z);
  for (std::uint64_t q = 1; q <= max_order; ++q) {
    const double a = std::round(turns * static_cast<double>(q));
    if (std::abs(turns - a / static_cast<double>(q)) <= phase_tol) return q;
  }
  return std::nullopt;
}

PeripheralSpectrum peripheral_spectrum(const SpectrumReport& report, double tol) { return split(report, tol, true); }

PeripheralSpectrum peripheral_spectrum_lenient(const SpectrumReport& report, double tol) {
  return split(report, tol, false);
}

bool verify_cyclic_peripheral(const PeripheralSpectrum& ps) {
  if (!ps.all_orders_detected()) {
    throw Error(ErrorKind::InvalidInput, "cyclicity check needs every peripheral order");
  }
  for (std::size_t i = 0; i < ps.values.size(); ++i) {
    const std::uint64_t q = *ps.orders[i];
    const std::uint64_t a = root_numerator(ps.values[i], q);
    for (std::uint64_t k = 0; k < q; ++k) {
      const double turns = static_cast<double>((a * k) % q) / static_cast<double>(q);
      const Complex target = std::polar(1.0, kTwoPi * turns);
      const bool present = std::any_of(ps.values.begin(), ps.values.end(),
                                       [&](Complex v) { return std::abs(v / std::abs(v) - target) <= 1e-6; });
      if (!present) return false;
    }
  }
  return true;
}

bool is_one_isolated(const SpectrumReport& report, double delta) {
  const bool has_one = std::any_of(report.eigenvalues.begin(), report.eigenvalues.end(),
                                   [](Complex z) { return std::abs(z - 1.0) <= 1e-6; });
  if (!has_one) throw Error(ErrorKind::InvalidHypothesis, "1 is not in the spectrum (tolerance 1e-6)");
  return report.gap_at_one >= delta || std::isinf(report.gap_at_one);
}

double choose_contour_radius(const PeripheralSpectrum& ps) {
  for (Complex v : ps.values) {
    if (std::abs(std::abs(v) - 1.0) > 1e-6) {
      throw Error(ErrorKind::InvalidHypothesis, "peripheral value off the unit circle");
    }
  }
  const double ir = ps.interior_radius;
  const double lo = ir + 1e-4;
  const double hi = 1.0 - 1e-4;
  if (lo > hi) {
    throw Error(ErrorKind::NoSpectralGap, "interior radius " + std::to_string(ir) + " leaves no admissible contour");
  }
  const double rho = std::clamp((ir + 1.0) / 2.0, lo, hi);
  // Trapezoidal aliasing bound at the node cap; beyond it no node count can
  // deliver a projection to 1e-8.
  const double ratio = std::max(ir / rho, rho);
  if (std::pow(ratio, static_cast<double>(kMaxNodes)) > 1e-12) {
    throw Error(ErrorKind::NoSpectralGap,
                "interior radius " + std::to_string(ir) + " is too close to 1 for a resolvable contour");
  }
  return rho;
}

Decomposition decompose(const ComplexMatrix& t, const DecomposeOptions& options) {
  const auto lattice = check_lattice_homomorphism(t);
  if (!lattice.is_lattice_hom) throw Error(ErrorKind::NotALatticeHomomorphism, lattice.reason);

  Decomposition d;
  d.spectrum = eigen(t, {.geometric = false});
  if (std::abs(d.spectrum.spectral_radius - 1.0) > 1e-8) {
    throw Error(ErrorKind::InvalidHypothesis,
                "spectral radius " + std::to_string(d.spectrum.spectral_radius) + " is not 1 (tolerance 1e-8)");
  }
  if (options.require_isolation && !is_one_isolated(d.spectrum, options.isolation_delta)) {
    throw Error(ErrorKind::NoSpectralGap, "1 is not isolated: gap " + std::to_string(d.spectrum.gap_at_one));
  }
  d.peripheral = peripheral_spectrum(d.spectrum);
  if (!verify_cyclic_peripheral(d.peripheral)) {
    throw Error(ErrorKind::TheoremViolation, "peripheral spectrum is not a union of cyclic groups");
  }
  d.contour_radius = choose_contour_radius(d.peripheral);

  const auto n = static_cast<Eigen::Index>(t.size());
  if (d.peripheral.interior_count == 0) {
    d.projection = CDense::Zero(n, n);
  } else {
    auto cp = projection_with_escalation(t, d);
    d.projection = std::move(cp.projection);
    d.quadrature_nodes = cp.nodes;
    d.idempotency_residual = cp.idempotency_residual;
    d.commutation_residual = cp.commutation_residual;
  }
  const CDense& p = d.projection;
  const CDense complement = CDense::Identity(n, n) - p;
  d.stab_basis = range_basis(p, "P");
  d.per_basis = range_basis(complement, "I - P");
  if (d.stab_basis.cols() + d.per_basis.cols() != n) {
    throw Error(ErrorKind::TheoremViolation, "dim I_stab + dim E_per = " +
                                                 std::to_string(d.stab_basis.cols() + d.per_basis.cols()) +
                                                 " != " + std::to_string(n));
  }

  // I_stab must be a coordinate ideal: P fixes e_i on its support and
  // vanishes elsewhere.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.row(i).cwiseAbs().maxCoeff() > kProjectionTol) d.stab_support.push_back(static_cast<std::size_t>(i));
  }
  if (d.stab_support.size() != d.stab_dimension()) {
    throw Error(ErrorKind::TheoremViolation, "range(P) is not spanned by coordinate vectors");
  }
  for (std::size_t i : d.stab_support) {
    CVector e = CVector::Zero(n);
    e(static_cast<Eigen::Index>(i)) = 1.0;
    if ((p.col(static_cast<Eigen::Index>(i)) - e).cwiseAbs().maxCoeff() > kProjectionTol) {
      throw Error(ErrorKind::TheoremViolation, "P does not fix e_" + std::to_string(i));
    }
  }
  if (const auto w = WeightedCompositionOperator::from_matrix(t)) {
    if (oracle_stab_support(*w) != d.stab_support) {
      throw Error(ErrorKind::TheoremViolation, "stable ideal support differs from the cycle-structure oracle");
    }
  }

  d.period = find_period(t, d);
  d.periodicity_residual = periodicity_residual(t, d.period, complement);

  // Measured decay of ||T^n P|| (SUP).
  const LeftMultiplier left(t.dense());
  std::vector<double> devs;
  devs.reserve(options.decay_horizon);
  CDense x = p;
  double constant = 0.0;
  for (std::size_t k = 1; k <= options.decay_horizon; ++k) {
    x = left.apply(x);
    devs.push_back(sup_norm(x));
    constant = std::max(constant, devs.back() / std::pow(d.contour_radius, static_cast<double>(k)));
  }
  const double floor = 1e-10 * std::max(1.0, sup_norm(p));
  const auto fit = geometric_decay_fit(devs, floor);
  d.stability_rate = std::isinf(fit.slope) ? 0.0 : std::exp(fit.slope);
  d.stability_constant = constant;
  return d;
}

std::uint64_t find_period(const ComplexMatrix& t, const Decomposition& d) {
  std::uint64_t n_period = 1;
  for (const auto& o : d.peripheral.orders) {
    if (!o) throw Error(ErrorKind::NotRootOfUnity, "peripheral order not detected");
    n_period = lcm_checked(n_period, *o);
  }
  const auto n = static_cast<Eigen::Index>(t.size());
  const CDense q = CDense::Identity(n, n) - d.projection;
  const double residual = periodicity_residual(t, n_period, q);
  if (residual > kProjectionTol) {
    throw Error(ErrorKind::SemisimplicityViolation, "||T^N (I-P) - (I-P)|| = " + std::to_string(residual) +
                                                        " for N = " + std::to_string(n_period));
  }
  for (std::uint64_t prime : prime_factors(n_period)) {
    if (periodicity_residual(t, n_period / prime, q) <= kProjectionTol) {
      throw Error(ErrorKind::TheoremViolation, "T^" + std::to_string(n_period / prime) +
                                                   " already fixes E_per although the peripheral orders have lcm " +
                                                   std::to_string(n_period));
    }
  }
  return n_period;
}

CDense peripheral_eigenspace_sum(const ComplexMatrix& t, const Decomposition& d) {
  const auto n = static_cast<Eigen::Index>(t.size());
  std::vector<CDense> blocks;
  Eigen::Index cols = 0;
  for (Complex lambda : d.peripheral.values) {
    CDense m = -t.dense();
    m.diagonal().array() += lambda;
    blocks.push_back(kernel_basis(m, 1e-12));
    cols += blocks.back().cols();
  }
  CDense sum(n, cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    sum.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  if (cols == 0) {
    if (d.per_dimension() != 0) throw Error(ErrorKind::TheoremViolation, "no peripheral eigenvectors");
    return sum;
  }
  Eigen::ColPivHouseholderQR<CDense> qr(sum);
  qr.setThreshold(kProjectionTol);
  if (qr.rank() != cols) {
    throw Error(ErrorKind::NonDirectSum, "peripheral eigenspaces are not linearly independent (rank " +
                                             std::to_string(qr.rank()) + " of " + std::to_string(cols) + ")");
  }
  if (static_cast<std::size_t>(cols) != d.per_dimension() || span_residual(d.per_basis, sum) > kProjectionTol ||
      span_residual(sum, d.per_basis) > kProjectionTol) {
    throw Error(ErrorKind::TheoremViolation, "sum of peripheral eigenspaces differs from E_per");
  }
  return sum;
}

bool semisimplicity_check(const ComplexMatrix& t, Complex lambda) {
  CDense m = -t.dense();
  m.diagonal().array() += lambda;
  // Ascent test: ker M = ker M^2 implies ker M = ker M^k for every k.
  const CDense m2 = m * m;
  return kernel_basis(m, 1e-12).cols() == kernel_basis(m2, 1e-12).cols();
}

bool spectral_periodicity_test(const ComplexMatrix& t) {
  const auto lattice = check_lattice_homomorphism(t);
  if (!lattice.is_lattice_hom) throw Error(ErrorKind::NotALatticeHomomorphism, lattice.reason);
  const auto rep = eigen(t, {.geometric = false});
  std::uint64_t n_period = 1;
  for (const auto& sv : rep.distinct) {
    if (std::abs(std::abs(sv.value) - 1.0) > 1e-6) return false;
    const auto q = root_of_unity_order(sv.value, rep.dimension);
    if (!q) return false;
    n_period = lcm_checked(n_period, *q);
  }
  const auto n = static_cast<Eigen::Index>(t.size());
  const CDense id = CDense::Identity(n, n);
  const double residual = max_abs(power_apply(t, n_period, id) - id);
  if (residual > kProjectionTol) {
    throw Error(ErrorKind::TheoremViolation, "spectrum lies on roots of unity but ||T^" + std::to_string(n_period) +
                                                 " - I|| = " + std::to_string(residual));
  }
  return true;
}

}  // namespace uergo
