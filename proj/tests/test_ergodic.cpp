#include <gtest/gtest.h>

#include <cmath>

#include "uergo/decomp.hpp"
#include "uergo/dynsys.hpp"
#include "uergo/ergodic.hpp"
#include "uergo/error.hpp"
#include "uergo/fit.hpp"
#include "uergo/generators.hpp"
#include "uergo/latops.hpp"

namespace uergo {
namespace {

double dist(const CDense& a, const CDense& b) { return (a - b).cwiseAbs().maxCoeff(); }

ComplexMatrix koopman(std::vector<State> image) { return koopman_matrix(FiniteMap(std::move(image))).matrix(); }

const ComplexMatrix kDiagHalfOne = ComplexMatrix::diagonal(std::vector<double>{0.5, 1.0});
const ComplexMatrix kConstantMap = ComplexMatrix::from_rows({{1.0, 0.0}, {1.0, 0.0}});

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidInput;
}

TEST(Cesaro, IdentityAveragesAreIdentity) {
  const auto seq = cesaro_averages(ComplexMatrix::identity(3), 16, NormKind::sup(), {.keep_averages = true});
  ASSERT_EQ(seq.averages.size(), 16u);
  for (const auto& a : seq.averages) EXPECT_LE(dist(a, CDense::Identity(3, 3)), 1e-15);
}

TEST(Cesaro, SwapAveragesAndDeviations) {
  const auto seq = cesaro_averages(koopman_matrix(FiniteMap::rotation(2)).matrix(), 64, NormKind::sup(),
                                   {.keep_averages = true});
  const CDense half = CDense::Constant(2, 2, 0.5);
  for (std::size_t m = 1; 2 * m <= 64; ++m) EXPECT_LE(dist(seq.averages[2 * m - 1], half), 1e-15);
  // Odd n: A_n - limit = (1/2n)(I - swap), SUP norm 1/n.
  for (std::size_t n = 1; n <= 64; n += 2) EXPECT_NEAR(seq.deviations[n - 1], 1.0 / static_cast<double>(n), 1e-14);
}

TEST(Cesaro, ConstantMapClosedForm) {
  // T^k = T for k >= 1, so A_n = ((n - 1) T + I) / n.
  const auto seq = cesaro_averages(kConstantMap, 32, NormKind::sup(), {.keep_averages = true});
  for (std::size_t n = 1; n <= 32; ++n) {
    const double nn = static_cast<double>(n);
    const CDense expected = ((nn - 1.0) * kConstantMap.dense() + CDense::Identity(2, 2)) / nn;
    EXPECT_LE(dist(seq.averages[n - 1], expected), 1e-14);
  }
  ASSERT_TRUE(seq.limit.has_value());
  EXPECT_LE(dist(*seq.limit, kConstantMap.dense()), 1e-12);
}

TEST(Cesaro, RecurrenceMatchesDirectSum) {
  Rng rng = instance_rng(301, 0);
  const auto t = gapped_weighted(rng, 40).op.matrix();
  const auto seq = cesaro_averages(t, 20, NormKind::sup(), {.keep_averages = true});
  const auto n = static_cast<Eigen::Index>(t.size());
  CDense sum = CDense::Zero(n, n);
  CDense power = CDense::Identity(n, n);
  for (std::size_t k = 0; k < 20; ++k) {
    sum += power;
    power = t.dense() * power;
    EXPECT_LE(dist(seq.averages[k], sum / static_cast<double>(k + 1)), 1e-13);
  }
}

TEST(MeanErgodic, Examples) {
  const auto id = uniform_mean_ergodic_test(ComplexMatrix::identity(3));
  EXPECT_EQ(id.verdict, Verdict::True);
  ASSERT_TRUE(id.limit.has_value());
  EXPECT_LE(dist(*id.limit, CDense::Identity(3, 3)), 1e-12);

  // 0 -> 1 -> 2 -> 3 -> 2: T^k f depends only on the 2-cycle for k >= 2, and
  // the limit averages over the cycle: L f(x) = (f(2) + f(3)) / 2. The limit
  // comes from doubling extrapolation, accurate to O(1/n) at the last step.
  const auto tail = uniform_mean_ergodic_test(koopman({1, 2, 3, 2}));
  EXPECT_EQ(tail.verdict, Verdict::True);
  ASSERT_TRUE(tail.limit.has_value());
  CDense expected = CDense::Zero(4, 4);
  expected.col(2).setConstant(0.5);
  expected.col(3).setConstant(0.5);
  EXPECT_LE(dist(*tail.limit, expected), 1e-6);

  EXPECT_EQ(uniform_mean_ergodic_test(jordan_block(2)).verdict, Verdict::False);
}

TEST(Approximant, Examples) {
  const auto d = decompose(kDiagHalfOne);
  const auto ap = almost_periodic_approximant(kDiagHalfOne, d, 30);
  CDense s = CDense::Zero(2, 2);
  s(1, 1) = 1.0;
  EXPECT_LE(dist(ap.s, s), 1e-12);
  EXPECT_EQ(ap.period, 1u);
  for (std::size_t n = 1; n <= 30; ++n) EXPECT_NEAR(ap.tn_minus_sn[n - 1], std::ldexp(1.0, -static_cast<int>(n)), 1e-12);

  const auto id = ComplexMatrix::identity(3);
  const auto api = almost_periodic_approximant(id, decompose(id), 10);
  EXPECT_LE(dist(api.s, CDense::Identity(3, 3)), 1e-15);
  for (double v : api.tn_minus_sn) EXPECT_EQ(v, 0.0);

  const auto tail = koopman({1, 2, 3, 2});
  const auto dt = decompose(tail);
  const auto apt = almost_periodic_approximant(tail, dt, 10);
  EXPECT_EQ(apt.period, 2u);
  EXPECT_LE(dist(apt.s, tail.dense() * (CDense::Identity(4, 4) - dt.projection)), 1e-12);
  EXPECT_GT(apt.tn_minus_sn[0], 0.5);
  for (std::size_t n = 2; n <= 10; ++n) EXPECT_LE(apt.tn_minus_sn[n - 1], 1e-10);
}

TEST(Equivalence, Examples) {
  const auto r = equivalence_harness(kDiagHalfOne);
  EXPECT_TRUE(r.one_isolated && r.uniformly_almost_periodic && r.mean_ergodic.verdict == Verdict::True);
  EXPECT_TRUE(r.consistent);
  for (std::uint64_t i = 0; i < 10; ++i) {
    Rng rng = instance_rng(303, i);
    const auto p = equivalence_harness(koopman_matrix(random_permutation(rng, 2 + 3 * i)).matrix());
    EXPECT_TRUE(p.one_isolated && p.uniformly_almost_periodic && p.consistent);
  }
  EXPECT_EQ(kind_of([] { equivalence_harness(jordan_block(2)); }), ErrorKind::InvalidHypothesis);
}

// The three verdicts are computed independently and agree on every valid
// instance; the Cesàro deviation decays like 1/n.
TEST(EquivalenceProperty, VerdictsAgreeAndCesaroDecays) {
  for (std::uint64_t i = 0; i < 30; ++i) {
    Rng rng = instance_rng(305, i);
    const auto g = gapped_weighted(rng, 40);
    const auto r = equivalence_harness(g.op.matrix());
    EXPECT_TRUE(r.consistent) << "instance " << i;
    EXPECT_TRUE(r.one_isolated);
    EXPECT_TRUE(r.uniformly_almost_periodic);
    EXPECT_EQ(r.mean_ergodic.verdict, Verdict::True);

    const auto seq = cesaro_averages(g.op.matrix(), 512);
    const auto fit = power_law_fit(seq.deviations, 1, 64, 512, 1e-13);
    EXPECT_GE(fit.exponent, 0.9) << "instance " << i;
  }
}

TEST(Nilpotency, Examples) {
  const auto tail = koopman({1, 2, 3, 2});
  const auto nt = nilpotency_index(tail, decompose(tail));
  EXPECT_TRUE(nt.applicable);
  EXPECT_EQ(nt.index, 2u);

  const auto id = ComplexMatrix::identity(3);
  EXPECT_EQ(nilpotency_index(id, decompose(id)).index, 0u);

  const auto nd = nilpotency_index(kDiagHalfOne, decompose(kDiagHalfOne));
  EXPECT_FALSE(nd.applicable);
  for (double v : nd.norms) EXPECT_GT(v, 0.0);
}

TEST(NilpotencyProperty, EqualsPreperiodOnKoopmanInstances) {
  for (std::uint64_t i = 0; i < 60; ++i) {
    Rng rng = instance_rng(307, i);
    const auto map = random_map(rng, 1 + (i * 11) % 120);
    const auto t = koopman_matrix(map).matrix();
    const auto r = nilpotency_index(t, decompose(t));
    ASSERT_TRUE(r.index.has_value());
    EXPECT_EQ(*r.index, cycle_structure(map).preperiod);
  }
}

TEST(TopologicalConsistency, Examples) {
  const auto c3 = koopman_consistency_topological(FiniteMap::rotation(3));
  EXPECT_EQ(c3.spectral, (EventualPeriod{0, 3}));
  EXPECT_EQ(c3.combinatorial, (EventualPeriod{0, 3}));

  const auto tail = koopman_consistency_topological(FiniteMap({1, 2, 3, 2}));
  EXPECT_EQ(tail.spectral, (EventualPeriod{2, 2}));
  EXPECT_EQ(tail.combinatorial, (EventualPeriod{2, 2}));

  const auto id = koopman_consistency_topological(FiniteMap::identity(4));
  EXPECT_EQ(id.spectral, (EventualPeriod{0, 1}));
}

TEST(Proposition, Examples) {
  Rng rng = instance_rng(309, 0);
  const auto perm = random_permutation(rng, 12);
  const auto t = koopman_matrix(perm).matrix();
  const auto v = proposition_check(t, CVector::Ones(12), NormKind::l1(FiniteMeasure::uniform(12)), 4);
  EXPECT_EQ(v.status, PropositionStatus::Periodic);
  EXPECT_EQ(v.period, cycle_structure(perm).period);

  CVector h(2);
  h << 1.0, 1.0;
  EXPECT_EQ(proposition_check(kConstantMap, h, NormKind::l1(FiniteMeasure::counting(2)), 8).status,
            PropositionStatus::NotApplicable);

  for (std::size_t n : {4, 8}) {
    const auto g = gallery("l1_doubling_truncation", n);
    const auto ones = CVector::Ones(static_cast<Eigen::Index>(g.op.size()));
    EXPECT_EQ(proposition_check(g.op, ones, g.norm, 16).status, PropositionStatus::NotApplicable);
  }
}

TEST(MeasureConsistency, Examples) {
  const auto c2 = koopman_consistency_measure(FiniteMap::rotation(2), FiniteMeasure::uniform(2),
                                              NormKind::l1(FiniteMeasure::uniform(2)));
  EXPECT_EQ(c2.spectral_period, 2u);
  EXPECT_NEAR(c2.operator_norm, 1.0, 1e-12);

  const FiniteMeasure mu({0.3, 1.7, 4.0});
  EXPECT_EQ(koopman_consistency_measure(FiniteMap::identity(3), mu, NormKind::l1(mu)).spectral_period, 1u);

  const auto t23 = FiniteMap({1, 0, 3, 4, 2});
  const auto m23 = koopman_consistency_measure(t23, FiniteMeasure::uniform(5), NormKind::l2(FiniteMeasure::uniform(5)));
  EXPECT_EQ(m23.spectral_period, 6u);
  EXPECT_EQ(m23.combinatorial_period, 6u);

  EXPECT_EQ(kind_of([] {
              koopman_consistency_measure(FiniteMap::constant(3, 0), FiniteMeasure::uniform(3),
                                          NormKind::l1(FiniteMeasure::uniform(3)));
            }),
            ErrorKind::InvalidHypothesis);
}

// Averages of measure-preserving Koopman operators contract every f in L^p.
TEST(MeasureProperty, AveragesContract) {
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng rng = instance_rng(311, i);
    const auto perm = random_permutation(rng, 3 + 5 * i);
    const auto mu = random_invariant_measure(rng, perm);
    const auto t = koopman_matrix(perm).matrix();
    const auto seq = cesaro_averages(t, 40, NormKind::sup(), {.keep_averages = true, .spectral_limit = false});
    const auto n = static_cast<Eigen::Index>(perm.size());
    const Eigen::Map<const Eigen::VectorXd> w(mu.weights().data(), n);
    for (int trial = 0; trial < 3; ++trial) {
      const CVector f = CVector::Random(n);
      const double l1 = w.dot(f.cwiseAbs());
      const double l2 = std::sqrt(w.dot(f.cwiseAbs2()));
      for (const auto& a : seq.averages) {
        const CVector af = a * f;
        EXPECT_LE(w.dot(af.cwiseAbs()), l1 * (1 + 1e-12));
        EXPECT_LE(std::sqrt(w.dot(af.cwiseAbs2())), l2 * (1 + 1e-12));
      }
    }
  }
}

}  // namespace
}  // namespace uergo
