#include "uergo/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "uergo/error.hpp"

namespace uergo {

FiniteMap::FiniteMap(std::vector<State> image) : image_(std::move(image)) {
  if (image_.empty()) throw Error(ErrorKind::InvalidInput, "finite map on zero states");
  const auto n = image_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (image_[i] >= n) {
      throw Error(ErrorKind::InvalidInput, "phi(" + std::to_string(i) + ") = " +
                                               std::to_string(image_[i]) + " is outside [0, " +
                                               std::to_string(n) + ")");
    }
  }
}

FiniteMap FiniteMap::identity(std::size_t n) {
  std::vector<State> image(n);
  std::iota(image.begin(), image.end(), State{0});
  return FiniteMap(std::move(image));
}

FiniteMap FiniteMap::rotation(std::size_t n) {
  std::vector<State> image(n);
  for (std::size_t i = 0; i < n; ++i) image[i] = (i + 1) % n;
  return FiniteMap(std::move(image));
}

FiniteMap FiniteMap::constant(std::size_t n, State target) {
  return FiniteMap(std::vector<State>(n, target));
}

FiniteMap FiniteMap::after(const FiniteMap& inner) const {
  if (inner.size() != size()) throw Error(ErrorKind::InvalidInput, "composing maps of different size");
  std::vector<State> image(size());
  for (std::size_t i = 0; i < size(); ++i) image[i] = image_[inner.image_[i]];
  return FiniteMap(std::move(image));
}

FiniteMap FiniteMap::power(std::uint64_t k) const {
  FiniteMap result = identity(size());
  FiniteMap base = *this;
  while (k > 0) {
    if (k & 1U) result = base.after(result);
    k >>= 1U;
    if (k > 0) base = base.after(base);
  }
  return result;
}

bool FiniteMap::is_bijection() const {
  std::vector<bool> hit(size(), false);
  for (State y : image_) {
    if (hit[y]) return false;
    hit[y] = true;
  }
  return true;
}

FiniteMeasure::FiniteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error(ErrorKind::InvalidInput, "measure on zero states");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || !(weights_[i] > 0.0)) {
      throw Error(ErrorKind::InvalidInput,
                  "measure atom " + std::to_string(i) + " is not strictly positive");
    }
  }
  total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

FiniteMeasure FiniteMeasure::uniform(std::size_t n) {
  return FiniteMeasure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

FiniteMeasure FiniteMeasure::counting(std::size_t n) { return FiniteMeasure(std::vector<double>(n, 1.0)); }

bool FiniteMeasure::is_probability(double tol) const { return std::abs(total_ - 1.0) <= tol; }

FiniteMeasure FiniteMeasure::normalized() const {
  std::vector<double> w = weights_;
  for (double& x : w) x /= total_;
  return FiniteMeasure(std::move(w));
}

std::uint64_t lcm_checked(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  const std::uint64_t g = std::gcd(a, b);
  const std::uint64_t q = a / g;
  if (q > UINT64_MAX / b) throw Error(ErrorKind::NumericFailure, "period overflows 64 bits");
  return q * b;
}

CycleStructure cycle_structure(const FiniteMap& map) {
  const std::size_t n = map.size();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  constexpr std::size_t kOnStack = static_cast<std::size_t>(-2);

  CycleStructure cs;
  cs.tail_height.assign(n, kUnvisited);
  cs.basin.assign(n, kUnvisited);

  std::vector<std::size_t> mark(n, kUnvisited);  // walk id, or resolved
  std::vector<State> path;
  for (State start = 0; start < n; ++start) {
    if (cs.tail_height[start] != kUnvisited) continue;
    path.clear();
    State x = start;
    while (cs.tail_height[x] == kUnvisited && mark[x] != kOnStack) {
      mark[x] = kOnStack;
      path.push_back(x);
      x = map(x);
    }
    std::size_t resolved_from = path.size();
    if (mark[x] == kOnStack && cs.tail_height[x] == kUnvisited) {
      // New cycle: the suffix of the path starting at x.
      const auto it = std::find(path.begin(), path.end(), x);
      resolved_from = static_cast<std::size_t>(it - path.begin());
      Cycle cycle;
      cycle.states.assign(it, path.end());
      std::rotate(cycle.states.begin(), std::min_element(cycle.states.begin(), cycle.states.end()),
                  cycle.states.end());
      const std::size_t id = cs.cycles.size();
      for (State y : cycle.states) {
        cs.tail_height[y] = 0;
        cs.basin[y] = id;
      }
      cs.cycles.push_back(std::move(cycle));
    }
    for (std::size_t i = resolved_from; i-- > 0;) {
      const State y = path[i];
      cs.tail_height[y] = cs.tail_height[map(y)] + 1;
      cs.basin[y] = cs.basin[map(y)];
    }
    for (State y : path) mark[y] = 0;
  }

  // Canonical cycle order: by smallest state.
  std::vector<std::size_t> order(cs.cycles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cs.cycles[a].states[0] < cs.cycles[b].states[0]; });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  std::vector<Cycle> sorted;
  sorted.reserve(order.size());
  for (std::size_t id : order) sorted.push_back(std::move(cs.cycles[id]));
  cs.cycles = std::move(sorted);
  for (auto& b : cs.basin) b = rank[b];

  for (State x = 0; x < n; ++x) {
    if (cs.tail_height[x] == 0) cs.periodic_points.push_back(x);
    cs.preperiod = std::max(cs.preperiod, cs.tail_height[x]);
  }
  cs.period = 1;
  for (const auto& c : cs.cycles) cs.period = lcm_checked(cs.period, c.length());
  return cs;
}

EventualPeriod eventual_period(const FiniteMap& map) {
  const auto cs = cycle_structure(map);
  return {cs.preperiod, cs.period};
}

bool is_periodic_map(const FiniteMap& map) { return cycle_structure(map).preperiod == 0; }

bool is_measure_preserving(const FiniteMap& map, const FiniteMeasure& mu) {
  if (mu.size() != map.size()) {
    throw Error(ErrorKind::InvalidInput, "measure has " + std::to_string(mu.size()) +
                                             " atoms but the map acts on " +
                                             std::to_string(map.size()) + " states");
  }
  std::vector<double> pushed(map.size(), 0.0);
  for (State x = 0; x < map.size(); ++x) pushed[map(x)] += mu[x];
  for (State y = 0; y < map.size(); ++y) {
    if (std::abs(pushed[y] - mu[y]) > 1e-12) return false;
  }
  return true;
}

}  // namespace uergo
