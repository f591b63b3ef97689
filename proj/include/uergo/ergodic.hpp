#pragma once

// Cesàro averages, uniform mean ergodicity, almost-periodic approximants and
// the three-way equivalence (1 isolated <=> uniformly almost periodic <=>
// uniformly mean ergodic) for lattice homomorphisms with r(T) = 1. Also the
// nilpotency and Koopman consistency checks on finite dynamical systems.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uergo/decomp.hpp"
#include "uergo/dynsys.hpp"
#include "uergo/fit.hpp"
#include "uergo/specmat.hpp"

namespace uergo {

struct CesaroOptions {
  /// Keep every A_n (n_max dense matrices); off by default.
  bool keep_averages = false;
  /// Compare against the spectral projection onto fix(T) along the rest of
  /// the spectrum (Schur route). Without it `deviations` stays empty.
  bool spectral_limit = true;
};

struct CesaroSequence {
  std::vector<CDense> averages;  // A_1..A_{n_max} when requested
  CDense last;                   // A_{n_max}
  CDense half;                   // A_{floor(n_max/2)}
  std::vector<double> norms;     // ||A_n||, n = 1..n_max
  std::vector<double> deviations;  // ||A_n - limit||, n = 1..n_max
  std::optional<CDense> limit;
  /// Norm growth overflowed; sequences stop early.
  bool overflow = false;
};

/// A_n = (1/n) sum_{k<n} T^k via A_{n+1} = (n A_n + T^n)/(n+1). No lattice
/// gate: usable on negative controls.
CesaroSequence cesaro_averages(const ComplexMatrix& t, std::size_t n_max, const NormKind& kind = NormKind::sup(),
                               const CesaroOptions& options = {});

enum class Verdict { False, True, Undecided };
const char* to_string(Verdict v);

struct MeanErgodicResult {
  Verdict verdict = Verdict::Undecided;
  std::optional<CDense> limit;
  double raw_defect = 0.0;       // ||A_{n_max} - A_{n_max/2}||
  double extrapolated_defect = 0.0;  // last ||A_{2m} - A_m|| after doubling
  std::size_t doublings = 0;
  double projection_residual = 0.0;  // ||L^2 - L||
  double fixed_residual = 0.0;       // max(||TL - L||, ||L K - K||), K = ker(I - T)
  std::string reason;
};

/// Cauchy test on the Cesàro sequence, extended past n_max by exact doubling
/// A_{2m} = (A_m + T^m A_m)/2. True when the extrapolated defect is <= tol and
/// the limit is a projection onto fix(T) (1e-6); False when the defects do not
/// decay or the averages blow up; Undecided otherwise.
MeanErgodicResult uniform_mean_ergodic_test(const ComplexMatrix& t, std::size_t n_max = 512, double tol = 1e-3);

struct Approximant {
  CDense s;  // T (I - P)
  std::uint64_t period = 1;
  /// max over n = 1..min(2N, 16) of ||S^{n+N} - S^n||.
  double periodicity_residual = 0.0;
  std::vector<double> tn_minus_sn;      // ||T^n - S^n||, n = 1..horizon
  std::vector<double> power_deviation;  // ||T^{n+N} - T^n||, n = 1..horizon
  GeometricFit fit;
  double floor = 0.0;
};

/// S = T (I - P) with power-sequence period N. Throws TheoremViolation when
/// periodicity fails (1e-8) or the decay slope exceeds log(rho) + 0.1.
Approximant almost_periodic_approximant(const ComplexMatrix& t, const Decomposition& d, std::size_t horizon = 64);

struct EquivalenceOptions {
  double isolation_delta = 1e-4;
  std::size_t cesaro_n_max = 512;
  double cesaro_tol = 1e-3;
  std::size_t horizon = 64;
};

struct ErgodicityReport {
  bool one_isolated = false;
  double gap_at_one = 0.0;
  bool uniformly_almost_periodic = false;
  std::string almost_periodic_reason;
  std::optional<Decomposition> decomposition;
  std::optional<Approximant> approximant;
  MeanErgodicResult mean_ergodic;
  bool consistent = false;

  /// Throws TheoremViolation with the three verdicts when inconsistent.
  void require_consistent() const;
};

/// Computes the three verdicts independently: (i) from the spectrum only,
/// (ii) from decompose (isolation not consulted) plus the approximant, (iii)
/// from the Cesàro sequence only. Requires a lattice homomorphism with
/// r(T) = 1 (InvalidHypothesis otherwise).
ErgodicityReport equivalence_harness(const ComplexMatrix& t, const EquivalenceOptions& options = {});

struct NilpotencyResult {
  /// T 1 = 1 within 1e-10.
  bool applicable = false;
  std::optional<std::size_t> index;
  /// ||(T|_I)^m|| (SUP), m = 1..|support|.
  std::vector<double> norms;
  /// Applicable but no m <= dim I_stab annihilates T|_I.
  bool violation = false;
};

/// Smallest m with ||(T|_{I_stab})^m|| <= 1e-10 (SUP), using the coordinate
/// support of I_stab. 0 when I_stab is trivial.
NilpotencyResult nilpotency_index(const ComplexMatrix& t, const Decomposition& d);

struct TopologicalConsistency {
  double gap_at_one = 0.0;
  EventualPeriod spectral;
  EventualPeriod combinatorial;
  std::size_t periodic_points = 0;
  std::size_t per_dimension = 0;
  Decomposition decomposition;
};

/// Koopman operator of `map`: 1 isolated, (nilpotency index, spectral
/// period) equals the minimal (k, p), and T^{k+p} = T^k exactly. Throws
/// TheoremViolation on any mismatch.
TopologicalConsistency koopman_consistency_topological(const FiniteMap& map);

enum class PropositionStatus { Periodic, NotApplicable };

struct PropositionVerdict {
  PropositionStatus status = PropositionStatus::NotApplicable;
  std::uint64_t period = 0;
  std::size_t contraction_power = 0;  // the m with ||T^m|| <= 1
  std::string reason;
};

/// Hypotheses: h strictly positive, T h <= h (1e-10), and ||T^m|| <= 1 + 1e-10
/// for some m <= n_contract in a strictly monotone norm (L1 or L2). When they
/// hold the operator must be periodic (TheoremViolation otherwise).
PropositionVerdict proposition_check(const ComplexMatrix& t, const CVector& h, const NormKind& kind,
                                     std::size_t n_contract);

struct MeasureConsistency {
  double operator_norm = 0.0;
  double gap_at_one = 0.0;
  std::uint64_t spectral_period = 0;
  std::uint64_t combinatorial_period = 0;
};

/// Requires mu-preservation (InvalidHypothesis). Asserts phi is a bijection,
/// ||T|| = 1 (1e-10) and T 1 = 1, 1 isolated, and spectral period = lcm of
/// cycle lengths; TheoremViolation otherwise.
MeasureConsistency koopman_consistency_measure(const FiniteMap& map, const FiniteMeasure& mu, const NormKind& kind);

/// lcm of the root-of-unity orders of the peripheral spectrum.
std::uint64_t spectral_period(const SpectrumReport& report);

}  // namespace uergo
