#pragma once

// Seeded instance generators for sweeps and property tests. Every instance
// draws from its own engine seeded by (global seed, instance index), so
// results do not depend on scheduling order.

#include <cstdint>
#include <random>
#include <vector>

#include "uergo/dynsys.hpp"
#include "uergo/latops.hpp"
#include "uergo/specmat.hpp"

namespace uergo {

using Rng = std::mt19937_64;

/// Engine for instance `index` of a sweep with `seed`.
Rng instance_rng(std::uint64_t seed, std::uint64_t index);

/// Uniformly random self-map of {0..n-1}.
FiniteMap random_map(Rng& rng, std::size_t n);
FiniteMap random_permutation(Rng& rng, std::size_t n);
/// Random map that is guaranteed not to be a bijection (n >= 2).
FiniteMap random_non_bijective_map(Rng& rng, std::size_t n);
/// Positive measure constant on each cycle of the permutation `map`, atoms in [0.5, 2].
FiniteMeasure random_invariant_measure(Rng& rng, const FiniteMap& map);

struct GappedWeighted {
  WeightedCompositionOperator op;
  /// Largest modulus among interior cycle eigenvalues (exact, by construction).
  double interior_cycle_radius = 0.0;
  std::uint64_t period = 1;  // lcm of peripheral cycle lengths
  std::size_t peripheral_states = 0;
};

/// Weighted composition with r(T) = 1 and gap at 1 >= 0.1: one or two
/// peripheral cycles (length <= 8, weight product 1), up to two interior
/// cycles of constant weight g <= 0.9, and weighted tails; n <= n_max.
GappedWeighted gapped_weighted(Rng& rng, std::size_t n_max = 40);

enum class ControlKind { TwoNonzeros, NegativeEntry, ComplexEntry, JordanBlock };

/// A matrix that is not a lattice homomorphism; cycles through the kinds by
/// `index`.
ComplexMatrix negative_control(Rng& rng, std::size_t index, std::size_t n_max = 12);
ControlKind negative_control_kind(std::size_t index);

/// J_k(1): ones on the diagonal and superdiagonal.
ComplexMatrix jordan_block(std::size_t k);

}  // namespace uergo
