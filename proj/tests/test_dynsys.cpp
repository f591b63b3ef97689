#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "uergo/dynsys.hpp"
#include "uergo/error.hpp"
#include "uergo/generators.hpp"

namespace uergo {
namespace {

// Minimal (k, p): the first repetition phi^j = phi^i (i < j) in the sequence
// of iterates gives k = i, p = j - i.
EventualPeriod brute_force_pair(const FiniteMap& map) {
  std::vector<FiniteMap> seen{FiniteMap::identity(map.size())};
  for (;;) {
    const FiniteMap next = map.after(seen.back());
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i] == next) return {i, seen.size() - i};
    }
    seen.push_back(next);
  }
}

std::vector<State> decode(std::size_t code, std::size_t n) {
  std::vector<State> image(n);
  for (std::size_t i = 0; i < n; ++i) {
    image[i] = code % n;
    code /= n;
  }
  return image;
}

TEST(FiniteMap, RejectsEmptyAndOutOfRange) {
  EXPECT_THROW(FiniteMap(std::vector<State>{}), Error);
  EXPECT_THROW(FiniteMap(std::vector<State>{0, 2}), Error);
}

TEST(CycleStructure, Examples) {
  const auto id = cycle_structure(FiniteMap::identity(3));
  EXPECT_EQ(id.preperiod, 0u);
  EXPECT_EQ(id.period, 1u);

  const auto rot = cycle_structure(FiniteMap::rotation(3));
  EXPECT_EQ(rot.preperiod, 0u);
  EXPECT_EQ(rot.period, 3u);

  const auto tail = cycle_structure(FiniteMap({1, 2, 3, 2}));
  EXPECT_EQ(tail.preperiod, 2u);
  EXPECT_EQ(tail.period, 2u);
  EXPECT_EQ(tail.periodic_points, (std::vector<State>{2, 3}));
  EXPECT_EQ(tail.tail_height, (std::vector<std::size_t>{2, 1, 0, 0}));
}

TEST(EventualPeriod, Examples) {
  EXPECT_EQ(eventual_period(FiniteMap({0, 0})), (EventualPeriod{1, 1}));
  EXPECT_EQ(eventual_period(FiniteMap({1, 0, 0})), (EventualPeriod{1, 2}));
  EXPECT_EQ(eventual_period(FiniteMap({1, 2, 0, 4, 3})), (EventualPeriod{0, 6}));
}

TEST(EventualPeriod, PermutationsHaveNoTail) {
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng rng = instance_rng(7, i);
    const auto p = random_permutation(rng, 1 + i % 20);
    const auto ep = eventual_period(p);
    EXPECT_EQ(ep.preperiod, 0u);
    // Order of the permutation: smallest m with p^m = id.
    std::uint64_t order = 1;
    while (!(p.power(order) == FiniteMap::identity(p.size()))) ++order;
    EXPECT_EQ(ep.period, order);
  }
}

TEST(PeriodicMap, Examples) {
  EXPECT_TRUE(is_periodic_map(FiniteMap::rotation(3)));
  EXPECT_FALSE(is_periodic_map(FiniteMap::constant(2, 0)));
  EXPECT_FALSE(is_periodic_map(FiniteMap::constant(5, 3)));
  EXPECT_TRUE(is_periodic_map(FiniteMap({1, 0, 3, 4, 2})));
}

TEST(MeasurePreservation, Examples) {
  Rng rng = instance_rng(3, 0);
  const auto perm = random_permutation(rng, 9);
  EXPECT_TRUE(is_measure_preserving(perm, FiniteMeasure::uniform(9)));
  EXPECT_FALSE(is_measure_preserving(FiniteMap::constant(4, 0), FiniteMeasure::uniform(4)));
  EXPECT_TRUE(is_measure_preserving(FiniteMap::identity(3), FiniteMeasure({0.1, 2.5, 7.0})));
  EXPECT_THROW(is_measure_preserving(FiniteMap::identity(3), FiniteMeasure::uniform(4)), Error);
}

TEST(FiniteMeasure, RejectsNonPositiveAtoms) {
  EXPECT_THROW(FiniteMeasure({1.0, 0.0}), Error);
  EXPECT_THROW(FiniteMeasure({1.0, -1.0}), Error);
  EXPECT_TRUE(FiniteMeasure::uniform(7).is_probability());
}

// Exhaustive over all maps with n <= 5 (3125 maps at n = 5): the cycle
// decomposition agrees with brute force, is minimal, and its invariants hold.
TEST(CycleStructureProperty, ExhaustiveSmallMaps) {
  for (std::size_t n = 1; n <= 5; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= n;
    for (std::size_t code = 0; code < total; ++code) {
      const FiniteMap map(decode(code, n));
      const auto cs = cycle_structure(map);
      ASSERT_EQ(brute_force_pair(map), (EventualPeriod{cs.preperiod, cs.period})) << "code " << code;
      ASSERT_EQ(map.power(cs.preperiod + cs.period), map.power(cs.preperiod));

      std::vector<State> from_cycles;
      for (const auto& c : cs.cycles) from_cycles.insert(from_cycles.end(), c.states.begin(), c.states.end());
      std::sort(from_cycles.begin(), from_cycles.end());
      ASSERT_EQ(from_cycles, cs.periodic_points);
      for (State x = 0; x < n; ++x) {
        const bool periodic = std::binary_search(cs.periodic_points.begin(), cs.periodic_points.end(), x);
        ASSERT_EQ(cs.tail_height[x] == 0, periodic);
      }
      ASSERT_EQ(is_periodic_map(map), map.is_bijection());
    }
  }
}

// Measure preservation with strictly positive atoms forces a bijection:
// exhaustive for n <= 6 against the uniform measure and a random one, and
// sampled for n <= 200.
TEST(MeasurePreservationProperty, ImpliesPeriodic) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> atom(0.1, 3.0);
  for (std::size_t n = 1; n <= 6; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= n;
    std::vector<double> w(n);
    for (auto& x : w) x = atom(rng);
    const FiniteMeasure random_mu(w);
    for (std::size_t code = 0; code < total; ++code) {
      const FiniteMap map(decode(code, n));
      for (const auto& mu : {FiniteMeasure::uniform(n), random_mu}) {
        if (is_measure_preserving(map, mu)) ASSERT_TRUE(is_periodic_map(map)) << "code " << code;
      }
      if (map.is_bijection()) ASSERT_TRUE(is_measure_preserving(map, FiniteMeasure::uniform(n)));
    }
  }
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng r = instance_rng(5, i);
    const std::size_t n = 2 + i % 199;
    const auto map = (i % 2 == 0) ? random_map(r, n) : random_non_bijective_map(r, n);
    if (is_measure_preserving(map, FiniteMeasure::uniform(n))) EXPECT_TRUE(is_periodic_map(map));
    if (i % 2 == 1) EXPECT_FALSE(is_measure_preserving(map, FiniteMeasure::uniform(n)));
    const auto perm = random_permutation(r, n);
    EXPECT_TRUE(is_measure_preserving(perm, random_invariant_measure(r, perm)));
  }
}

TEST(CycleStructureProperty, RandomMapsMinimalAndIterationLandsOnCycle) {
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng = instance_rng(9, i);
    const std::size_t n = 1 + (i * 37) % 200;
    const auto map = random_map(rng, n);
    const auto cs = cycle_structure(map);
    const auto base = map.power(cs.preperiod);
    EXPECT_EQ(map.power(cs.preperiod + cs.period), base);
    if (cs.preperiod > 0) EXPECT_NE(map.power(cs.preperiod - 1 + cs.period), map.power(cs.preperiod - 1));
    // Proper divisors of the period fail at the minimal preperiod.
    for (std::uint64_t q = 1; q < cs.period; ++q) {
      if (cs.period % q == 0) EXPECT_NE(map.power(cs.preperiod + q), base);
    }
    const auto land = map.power(cs.preperiod + cs.period);
    for (State x = 0; x < n; ++x) EXPECT_EQ(cs.tail_height[land(x)], 0u);
  }
}

TEST(Lcm, OverflowIsReported) {
  EXPECT_EQ(lcm_checked(4, 6), 12u);
  EXPECT_THROW(lcm_checked(std::uint64_t{1} << 40, (std::uint64_t{1} << 40) - 1), Error);
}

}  // namespace
}  // namespace uergo
