#pragma once

// Finite dynamical systems: self-maps of {0, ..., n-1} (functional graphs)
// and their exact cycle/tail analysis. Everything spectral in this library is
// cross-checked against the combinatorics computed here.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace uergo {

using State = std::size_t;

/// A self-map phi of {0, ..., n-1}; image[i] = phi(i).
class FiniteMap {
 public:
  /// Throws ErrorKind::InvalidInput for an empty image or an entry >= n.
  explicit FiniteMap(std::vector<State> image);

  static FiniteMap identity(std::size_t n);
  /// 0 -> 1 -> ... -> n-1 -> 0.
  static FiniteMap rotation(std::size_t n);
  static FiniteMap constant(std::size_t n, State target);

  std::size_t size() const noexcept { return image_.size(); }
  State operator()(State x) const { return image_[x]; }
  std::span<const State> image() const noexcept { return image_; }

  /// (*this) o inner, i.e. x -> phi(inner(x)).
  FiniteMap after(const FiniteMap& inner) const;
  FiniteMap power(std::uint64_t k) const;
  bool is_bijection() const;

  bool operator==(const FiniteMap&) const = default;

 private:
  std::vector<State> image_;
};

struct Cycle {
  /// States in orbit order starting from the smallest index on the cycle.
  std::vector<State> states;
  std::size_t length() const noexcept { return states.size(); }
};

struct CycleStructure {
  std::vector<State> periodic_points;  // sorted
  std::vector<Cycle> cycles;           // sorted by first state
  std::vector<std::size_t> tail_height;
  /// Index of the cycle each state eventually falls into.
  std::vector<std::size_t> basin;
  std::size_t preperiod = 0;  // k
  std::uint64_t period = 1;   // p = lcm of cycle lengths

  bool is_periodic_point(State x) const { return tail_height[x] == 0; }
};

struct EventualPeriod {
  std::size_t preperiod = 0;
  std::uint64_t period = 1;
  bool operator==(const EventualPeriod&) const = default;
};

/// A strictly positive finite measure on {0, ..., n-1}.
class FiniteMeasure {
 public:
  /// Throws ErrorKind::InvalidInput unless every weight is finite and > 0.
  explicit FiniteMeasure(std::vector<double> weights);
  static FiniteMeasure uniform(std::size_t n);   // probability
  static FiniteMeasure counting(std::size_t n);  // every atom 1

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  double total() const noexcept { return total_; }
  bool is_probability(double tol = 1e-12) const;
  FiniteMeasure normalized() const;

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
};

/// Exact cycle decomposition. preperiod/period are the minimal (k, p) with
/// phi^(k+p) = phi^k; computed from tail heights and the lcm of cycle lengths.
/// Throws ErrorKind::NumericFailure if the lcm does not fit in 64 bits.
CycleStructure cycle_structure(const FiniteMap& map);

EventualPeriod eventual_period(const FiniteMap& map);

/// True iff the preperiod is 0, which on a finite set means phi is a bijection.
bool is_periodic_map(const FiniteMap& map);

/// True iff sum_{x : phi(x) = y} mu(x) = mu(y) for every y, within 1e-12.
bool is_measure_preserving(const FiniteMap& map, const FiniteMeasure& mu);

std::uint64_t lcm_checked(std::uint64_t a, std::uint64_t b);

}  // namespace uergo
