#include "uergo/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "uergo/error.hpp"

namespace uergo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

Rng instance_rng(std::uint64_t seed, std::uint64_t index) { return Rng(splitmix64(splitmix64(seed) ^ index)); }

FiniteMap random_map(Rng& rng, std::size_t n) {
  std::vector<State> image(n);
  for (auto& y : image) y = uniform_index(rng, 0, n - 1);
  return FiniteMap(std::move(image));
}

FiniteMap random_permutation(Rng& rng, std::size_t n) {
  std::vector<State> image(n);
  std::iota(image.begin(), image.end(), State{0});
  std::shuffle(image.begin(), image.end(), rng);
  return FiniteMap(std::move(image));
}

FiniteMap random_non_bijective_map(Rng& rng, std::size_t n) {
  if (n < 2) throw Error(ErrorKind::InvalidInput, "a non-bijective map needs n >= 2");
  std::vector<State> image(n);
  for (auto& y : image) y = uniform_index(rng, 0, n - 1);
  const std::size_t a = uniform_index(rng, 0, n - 1);
  std::size_t b = uniform_index(rng, 0, n - 2);
  if (b >= a) ++b;
  image[b] = image[a];
  return FiniteMap(std::move(image));
}

FiniteMeasure random_invariant_measure(Rng& rng, const FiniteMap& map) {
  const auto cs = cycle_structure(map);
  std::vector<double> weights(map.size(), 1.0);
  for (const auto& cycle : cs.cycles) {
    const double w = uniform_real(rng, 0.5, 2.0);
    for (State s : cycle.states) weights[s] = w;
  }
  return FiniteMeasure(std::move(weights));
}

GappedWeighted gapped_weighted(Rng& rng, std::size_t n_max) {
  if (n_max < 34) throw Error(ErrorKind::InvalidInput, "gapped_weighted needs n_max >= 34");
  std::vector<State> image;
  std::vector<double> weights;
  auto add_cycle = [&](std::size_t len, std::vector<double> w) {
    const std::size_t start = image.size();
    for (std::size_t j = 0; j < len; ++j) {
      image.push_back(start + (j + 1) % len);
      weights.push_back(w[j]);
    }
  };

  GappedWeighted out{WeightedCompositionOperator(FiniteMap::identity(1), {1.0}), 0.0, 1, 0};
  const std::size_t peripheral = uniform_index(rng, 1, 2);
  for (std::size_t c = 0; c < peripheral; ++c) {
    const std::size_t len = uniform_index(rng, 1, 8);
    std::vector<double> w(len);
    double log_prod = 0.0;
    for (auto& x : w) {
      x = uniform_real(rng, 0.5, 2.0);
      log_prod += std::log(x);
    }
    const double scale = std::exp(-log_prod / static_cast<double>(len));
    for (auto& x : w) x *= scale;
    add_cycle(len, std::move(w));
    out.period = std::lcm(out.period, static_cast<std::uint64_t>(len));
  }
  out.peripheral_states = image.size();

  const std::size_t interior = uniform_index(rng, 0, 2);
  for (std::size_t c = 0; c < interior; ++c) {
    const std::size_t len = uniform_index(rng, 1, 8);
    const double g = uniform_real(rng, 0.0, 0.9);
    add_cycle(len, std::vector<double>(len, g));
    out.interior_cycle_radius = std::max(out.interior_cycle_radius, g);
  }

  const std::size_t core = image.size();
  const std::size_t n = uniform_index(rng, core, n_max);
  for (std::size_t x = core; x < n; ++x) {
    image.push_back(uniform_index(rng, 0, x - 1));
    weights.push_back(uniform_real(rng, 0.5, 1.5));
  }

  // Shuffle labels: state x becomes perm[x].
  std::vector<State> perm(n);
  std::iota(perm.begin(), perm.end(), State{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<State> relabeled(n);
  std::vector<double> reweighted(n);
  for (std::size_t x = 0; x < n; ++x) {
    relabeled[perm[x]] = perm[image[x]];
    reweighted[perm[x]] = weights[x];
  }
  out.op = WeightedCompositionOperator(FiniteMap(std::move(relabeled)), std::move(reweighted));
  return out;
}

ControlKind negative_control_kind(std::size_t index) { return static_cast<ControlKind>(index % 4); }

ComplexMatrix jordan_block(std::size_t k) {
  const auto n = static_cast<Eigen::Index>(k);
  CDense m = CDense::Identity(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = 1.0;
  return ComplexMatrix(std::move(m));
}

ComplexMatrix negative_control(Rng& rng, std::size_t index, std::size_t n_max) {
  const std::size_t n = uniform_index(rng, 2, std::max<std::size_t>(2, n_max));
  const ControlKind kind = negative_control_kind(index);
  if (kind == ControlKind::JordanBlock) return jordan_block(n);

  const auto map = random_map(rng, n);
  CDense m = koopman_matrix(map).matrix().dense();
  const std::size_t row = uniform_index(rng, 0, n - 1);
  const auto r = static_cast<Eigen::Index>(row);
  const auto c = static_cast<Eigen::Index>(map(row));
  switch (kind) {
    case ControlKind::TwoNonzeros: {
      std::size_t other = uniform_index(rng, 0, n - 2);
      if (other >= map(row)) ++other;
      m(r, static_cast<Eigen::Index>(other)) = uniform_real(rng, 0.1, 1.0);
      break;
    }
    case ControlKind::NegativeEntry:
      m(r, c) = -uniform_real(rng, 0.1, 2.0);
      break;
    case ControlKind::ComplexEntry:
      m(r, c) = std::polar(1.0, uniform_real(rng, 0.3, 2.0 * std::numbers::pi - 0.3));
      break;
    case ControlKind::JordanBlock:
      break;
  }
  return ComplexMatrix(std::move(m));
}

}  // namespace uergo
