#pragma once

// Finite-dimensional lattice homomorphisms. On C^n with the coordinatewise
// order these are exactly the weighted composition matrices
// (Tf)(x) = w(x) f(phi(x)), w >= 0: at most one nonzero, nonnegative entry
// per row.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uergo/dynsys.hpp"
#include "uergo/specmat.hpp"

namespace uergo {

class WeightedCompositionOperator {
 public:
  /// Throws NotALatticeHomomorphism for a negative weight and InvalidInput
  /// for a length mismatch or non-finite weight.
  WeightedCompositionOperator(FiniteMap map, std::vector<double> weights);

  /// Recovers (phi, w) from a matrix with at most one nonnegative real
  /// nonzero per row. Zero rows become fixed points with weight 0.
  static std::optional<WeightedCompositionOperator> from_matrix(const ComplexMatrix& t);

  const FiniteMap& map() const noexcept { return map_; }
  std::span<const double> weights() const noexcept { return weights_; }
  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  std::size_t size() const noexcept { return map_.size(); }

  /// w(x) f(phi(x)).
  CVector apply(const CVector& f) const;

  /// max over cycles of (product of weights along the cycle)^(1/length).
  double cycle_spectral_radius() const;

  /// T^k as a weighted composition: phi^k with w_k(x) = prod_{j<k} w(phi^j(x)).
  WeightedCompositionOperator power(std::uint64_t k) const;

 private:
  FiniteMap map_;
  std::vector<double> weights_;
  ComplexMatrix matrix_;
};

/// Koopman matrix f -> f o phi (all weights 1).
WeightedCompositionOperator koopman_matrix(const FiniteMap& map);
WeightedCompositionOperator weighted_composition(const FiniteMap& map, std::vector<double> weights);

/// T^k X. Uses the weighted-composition structure of T when present
/// (O(n^2 + n log k)); otherwise dense binary exponentiation.
CDense power_apply(const ComplexMatrix& t, std::uint64_t k, const CDense& x);

struct LatticeHomCheck {
  bool is_lattice_hom = false;
  bool structural = false;
  bool sampled = false;
  /// A vector with | |Tf| - T|f| | above `tolerance` in some row; present
  /// whenever is_lattice_hom is false.
  std::optional<CVector> witness;
  double violation = 0.0;
  std::string reason;
};

/// Structural test (<= 1 nonzero nonnegative real entry per row, relative
/// threshold 1e-13) and a seeded modulus-commutation sampler over `trials`
/// random complex vectors. Throws InternalInconsistency when they disagree.
LatticeHomCheck check_lattice_homomorphism(const ComplexMatrix& t, std::size_t trials = 8,
                                           std::uint64_t seed = 0x5eed);

/// Row-wise modulus defect of f: max_x | |Tf|(x) - (T|f|)(x) | relative to
/// sum_y |T_xy| |f_y|.
double modulus_defect(const ComplexMatrix& t, const CVector& f);

/// Requires a lattice homomorphism with |r(T) - 1| <= 1e-8 (InvalidHypothesis
/// otherwise); true iff an eigenvalue lies within 1e-6 of 1.
bool one_in_spectrum_check(const ComplexMatrix& t);

/// Every coordinate strictly positive.
bool quasi_interior_check(std::span<const double> h);
bool quasi_interior_check(const CVector& h);

struct GalleryExpectation {
  std::vector<Complex> spectrum;  // distinct values
  bool one_isolated = true;
  bool periodic = false;
  bool unit_fixed = true;  // T1 = 1
  std::optional<std::size_t> stab_dimension;
  std::optional<bool> nilpotent_on_stab;
  std::optional<double> operator_norm;
  std::optional<EventualPeriod> eventual_period;
  std::optional<std::size_t> nilpotency_index;
};

struct GalleryInstance {
  std::string name;
  std::size_t truncation = 0;
  ComplexMatrix op;
  NormKind norm;
  std::optional<FiniteMeasure> measure;
  CVector unit;  // the positive vector h used for the unit / quasi-interior role
  std::optional<FiniteMap> map;
  std::optional<WeightedCompositionOperator> weighted;
  GalleryExpectation expect;
};

std::vector<std::string_view> gallery_names();

/// Names: am_diag_half_one, l1_constant_map, c_limit_truncation,
/// l1_doubling_truncation. `n` is used only by the truncations.
/// Throws UnknownName.
GalleryInstance gallery(std::string_view name, std::size_t n = 8);

/// Coordinates 1..n of the doubling truncation (the dyadic cells of [0, 1]).
std::vector<std::size_t> doubling_tail_coordinates(std::size_t n);

}  // namespace uergo
