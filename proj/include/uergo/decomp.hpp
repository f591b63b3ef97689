#pragma once

// Stable/periodic splitting of a lattice homomorphism T with r(T) = 1 and 1
// isolated in the spectrum: E = I_stab (+) E_per, where powers of T decay
// geometrically on the closed ideal I_stab and some power T^N is the identity
// on the sublattice E_per.

#include <cstdint>
#include <optional>
#include <vector>

#include "uergo/specmat.hpp"

namespace uergo {

struct PeripheralSpectrum {
  std::vector<Complex> values;
  /// Root-of-unity order per value; nullopt when no q <= n fits.
  std::vector<std::optional<std::uint64_t>> orders;
  double interior_radius = 0.0;
  std::size_t interior_count = 0;  // non-peripheral eigenvalues, with multiplicity
  double spectral_radius = 0.0;
  std::size_t dimension = 0;

  bool all_orders_detected() const;
};

/// Order q <= max_order of the root of unity closest to z, if
/// |arg(z)/(2 pi) - a/q| <= phase_tol (mod 1).
std::optional<std::uint64_t> root_of_unity_order(Complex z, std::uint64_t max_order, double phase_tol = 1e-6);

/// Splits the spectrum at |lambda| >= 1 - tol. Requires |r(T) - 1| <= 1e-8
/// (InvalidHypothesis). Throws NotRootOfUnity for an undetectable order.
PeripheralSpectrum peripheral_spectrum(const SpectrumReport& report, double tol = 1e-6);
/// Same split, but undetectable orders are reported as nullopt.
PeripheralSpectrum peripheral_spectrum_lenient(const SpectrumReport& report, double tol = 1e-6);

/// Closure of the peripheral set under powers: every lambda^k, k < order,
/// is present within 1e-6. Requires all orders (InvalidInput otherwise).
bool verify_cyclic_peripheral(const PeripheralSpectrum& ps);

/// gap_at_one >= delta, or sigma(T) = {1}. Throws InvalidHypothesis when 1 is
/// not within 1e-6 of the spectrum.
bool is_one_isolated(const SpectrumReport& report, double delta = 1e-4);

/// rho = (interior_radius + 1) / 2 clamped to [interior + 1e-4, 1 - 1e-4].
/// Throws NoSpectralGap when the clamp is empty or when the trapezoidal rule
/// cannot resolve the annulus within the 4096-node cap.
double choose_contour_radius(const PeripheralSpectrum& ps);

struct Decomposition {
  CDense projection;  // P, onto I_stab along E_per
  double contour_radius = 0.5;
  std::size_t quadrature_nodes = 0;
  CDense stab_basis;  // orthonormal columns spanning range(P)
  CDense per_basis;   // orthonormal columns spanning range(I - P)
  std::uint64_t period = 1;
  /// Fitted geometric decay rate of ||T^n P|| (0 when it reaches numerical zero).
  double stability_rate = 0.0;
  /// max_n ||T^n P|| / rho^n over the measured range.
  double stability_constant = 0.0;
  double idempotency_residual = 0.0;
  double commutation_residual = 0.0;
  double periodicity_residual = 0.0;  // ||T^N (I - P) - (I - P)||
  /// Coordinates spanning I_stab (the ideal's support).
  std::vector<std::size_t> stab_support;
  PeripheralSpectrum peripheral;
  SpectrumReport spectrum;

  std::size_t stab_dimension() const { return static_cast<std::size_t>(stab_basis.cols()); }
  std::size_t per_dimension() const { return static_cast<std::size_t>(per_basis.cols()); }
};

struct DecomposeOptions {
  double isolation_delta = 1e-4;
  /// When false the isolation verdict is not consulted; the construction is
  /// attempted and its own checks decide.
  bool require_isolation = true;
  /// Horizon for the measured decay of ||T^n P||.
  std::size_t decay_horizon = 64;
};

/// Requires a lattice homomorphism with r(T) = 1 (within 1e-8) and 1
/// isolated. Verifies idempotency/commutation, the period, the dimension
/// count and that range(P) is a coordinate ideal matching the cycle oracle.
Decomposition decompose(const ComplexMatrix& t, const DecomposeOptions& options = {});

/// N = lcm of the peripheral orders, verified by ||T^N (I-P) - (I-P)|| <= 1e-8;
/// minimality checked on N/q for every prime q | N. Throws
/// SemisimplicityViolation when verification fails.
std::uint64_t find_period(const ComplexMatrix& t, const Decomposition& d);

/// Concatenated kernel bases of (lambda - T) over the peripheral values.
/// Throws NonDirectSum when the concatenation is rank deficient and
/// TheoremViolation when its span differs from span(per_basis).
CDense peripheral_eigenspace_sum(const ComplexMatrix& t, const Decomposition& d);

/// dim ker(lambda - T) == dim ker((lambda - T)^2), with kernel tolerance 1e-12.
bool semisimplicity_check(const ComplexMatrix& t, Complex lambda);

/// True iff every eigenvalue is within 1e-6 of the unit circle and has a
/// detectable root-of-unity order; a true verdict is confirmed by
/// ||T^N - I|| <= 1e-8 (TheoremViolation otherwise).
bool spectral_periodicity_test(const ComplexMatrix& t);

}  // namespace uergo
