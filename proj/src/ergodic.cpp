#include "uergo/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uergo/error.hpp"
#include "uergo/latops.hpp"
#include "moduli.hpp"

namespace uergo {

namespace {

constexpr double kProjTol = 1e-8;
constexpr double kLimitTol = 1e-6;
constexpr double kOverflow = 1e100;
constexpr std::size_t kMaxDoublings = 24;
constexpr double kConverged = 1e-7;

double sup_norm(const CDense& m) { return detail::max_row_sum(m); }

void require_lattice_unit_radius(const ComplexMatrix& t, const SpectrumReport& rep) {
  const auto lattice = check_lattice_homomorphism(t);
  if (!lattice.is_lattice_hom) {
    throw Error(ErrorKind::InvalidHypothesis, "not a lattice homomorphism: " + lattice.reason);
  }
  if (std::abs(rep.spectral_radius - 1.0) > 1e-8) {
    throw Error(ErrorKind::InvalidHypothesis,
                "spectral radius " + std::to_string(rep.spectral_radius) + " is not 1 (tolerance 1e-8)");
  }
}

bool recoverable(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::NoSpectralGap:
    case ErrorKind::QuadratureFailure:
    case ErrorKind::BadRadius:
    case ErrorKind::SingularResolvent:
      return true;
    default:
      return false;
  }
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::True:
      return "true";
    case Verdict::False:
      return "false";
    case Verdict::Undecided:
      return "undecided";
  }
  return "undecided";
}

namespace {

double real_norm(const Eigen::MatrixXd& m, const NormKind& kind) {
  switch (kind.tag()) {
    case NormKind::Tag::Sup:
      return m.cwiseAbs().rowwise().sum().maxCoeff();
    case NormKind::Tag::L1:
      return operator_norm(CDense(m.cast<Complex>()), kind);
    case NormKind::Tag::L2:
      return operator_norm(CDense(m.cast<Complex>()), kind);
  }
  return 0.0;
}

double norm_of(const CDense& m, const NormKind& kind) { return operator_norm(m, kind); }
double norm_of(const Eigen::MatrixXd& m, const NormKind& kind) { return real_norm(m, kind); }

// X -> T X with a row gather when T has at most one nonzero per row.
template <class M>
class Gather {
 public:
  explicit Gather(const M& t) : t_(t), column_(static_cast<std::size_t>(t.rows()), -1) {
    for (Eigen::Index i = 0; i < t.rows() && structured_; ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        if (t(i, j) == typename M::Scalar(0)) continue;
        if (column_[static_cast<std::size_t>(i)] >= 0) {
          structured_ = false;
          break;
        }
        column_[static_cast<std::size_t>(i)] = j;
      }
    }
  }
  void apply(const M& x, M& out) const {
    if (!structured_) {
      out.noalias() = t_ * x;
      return;
    }
    // Row access on column-major storage is strided; walk columns instead.
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::Index k = column_[static_cast<std::size_t>(i)];
        out(i, c) = k < 0 ? typename M::Scalar(0) : t_(i, k) * x(k, c);
      }
    }
  }

 private:
  const M& t_;
  std::vector<Eigen::Index> column_;
  bool structured_ = true;
};

template <class M>
void cesaro_loop(const M& t, std::size_t n_max, const NormKind& kind, const CesaroOptions& options,
                 const std::optional<M>& limit, CesaroSequence& seq) {
  const Eigen::Index n = t.rows();
  const Gather<M> left(t);
  const std::size_t half = n_max / 2;
  M power = M::Identity(n, n);  // T^k
  M next(n, n);
  M avg = power;  // A_1
  for (std::size_t k = 1; k <= n_max; ++k) {
    const double norm = norm_of(avg, kind);
    if (!std::isfinite(norm) || norm > kOverflow) {
      seq.overflow = true;
      break;
    }
    seq.norms.push_back(norm);
    if (limit) seq.deviations.push_back(norm_of(M(avg - *limit), kind));
    if (options.keep_averages) seq.averages.push_back(avg.template cast<Complex>());
    if (k == half) seq.half = avg.template cast<Complex>();
    if (k == n_max) {
      seq.last = avg.template cast<Complex>();
      break;
    }
    left.apply(power, next);
    power.swap(next);
    const auto kd = static_cast<double>(k);
    avg = (kd * avg + power) / (kd + 1.0);
  }
}

}  // namespace

CesaroSequence cesaro_averages(const ComplexMatrix& t, std::size_t n_max, const NormKind& kind,
                               const CesaroOptions& options) {
  if (n_max < 2) throw Error(ErrorKind::InvalidInput, "Cesàro averages need n_max >= 2");
  CesaroSequence seq;
  if (options.spectral_limit) {
    seq.limit = schur_spectral_projection(t, [](Complex z) { return std::abs(z - 1.0) <= 1e-6; });
  }
  // Real operators keep real averages (and a real limit): half the work.
  if (t.is_real() && (!seq.limit || seq.limit->imag().cwiseAbs().maxCoeff() <= 1e-12)) {
    std::optional<Eigen::MatrixXd> limit;
    if (seq.limit) limit = seq.limit->real();
    cesaro_loop<Eigen::MatrixXd>(t.dense().real(), n_max, kind, options, limit, seq);
  } else {
    cesaro_loop<CDense>(t.dense(), n_max, kind, options, seq.limit, seq);
  }
  return seq;
}

MeanErgodicResult uniform_mean_ergodic_test(const ComplexMatrix& t, std::size_t n_max, double tol) {
  MeanErgodicResult out;
  const auto seq = cesaro_averages(t, n_max, NormKind::sup(), {.keep_averages = false, .spectral_limit = false});
  if (seq.overflow) {
    out.verdict = Verdict::False;
    out.reason = "Cesàro averages overflow";
    return out;
  }
  out.raw_defect = sup_norm(seq.last - seq.half);

  // Exact doubling: A_{2m} = (A_m + T^m A_m) / 2, T^{2m} = T^m T^m. Rounding in
  // T^m grows linearly in m, so the doubling is capped and the best iterate kept.
  const auto n = static_cast<Eigen::Index>(t.size());
  CDense avg = seq.last;
  CDense best = avg;
  CDense power = power_apply(t, n_max, CDense::Identity(n, n));
  std::vector<double> defects;
  double best_defect = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < kMaxDoublings; ++j) {
    const LeftMultiplier by_power(power);
    CDense next = 0.5 * (avg + by_power.apply(avg));
    const double defect = sup_norm(next - avg);
    const double scale = sup_norm(next);
    if (!std::isfinite(defect) || !std::isfinite(scale) || scale > kOverflow) {
      out.verdict = Verdict::False;
      out.reason = "Cesàro averages diverge under extrapolation";
      out.doublings = j + 1;
      return out;
    }
    defects.push_back(defect);
    power = by_power.apply(power);
    avg = std::move(next);
    if (defect < best_defect) {
      best_defect = defect;
      best = avg;
    }
    if (defect <= kConverged * std::max(1.0, scale)) break;
  }
  out.doublings = defects.size();
  out.extrapolated_defect = best_defect;

  if (best_defect > tol) {
    const bool growing = defects.back() >= defects.front();
    const bool stalled = best_defect >= 0.9 * defects.front();
    out.verdict = growing || stalled ? Verdict::False : Verdict::Undecided;
    out.reason = growing   ? "Cesàro averages grow"
                 : stalled ? "Cesàro defects do not decay"
                           : "Cesàro defects decay but stay above tolerance";
    return out;
  }

  const CDense& lim = best;
  const double scale = std::max(1.0, sup_norm(lim));
  out.projection_residual = max_abs(lim * lim - lim);
  const LeftMultiplier left(t.dense());
  out.fixed_residual = max_abs(left.apply(lim) - lim);
  CDense shifted = -t.dense();
  shifted.diagonal().array() += 1.0;
  const CDense fix = kernel_basis(shifted, 1e-12);
  if (fix.cols() > 0) out.fixed_residual = std::max(out.fixed_residual, max_abs(lim * fix - fix));
  out.limit = lim;
  if (out.projection_residual <= kLimitTol * scale && out.fixed_residual <= kLimitTol * scale) {
    out.verdict = Verdict::True;
    out.reason = "Cesàro averages converge to the projection onto fix(T)";
  } else {
    out.verdict = Verdict::Undecided;
    out.reason = "Cesàro limit is not a projection onto fix(T) within 1e-6";
  }
  return out;
}

Approximant almost_periodic_approximant(const ComplexMatrix& t, const Decomposition& d, std::size_t horizon) {
  const auto n = static_cast<Eigen::Index>(t.size());
  const CDense id = CDense::Identity(n, n);
  const CDense q = id - d.projection;
  const LeftMultiplier left(t.dense());
  Approximant ap;
  ap.s = left.apply(q);
  ap.period = d.period;

  // S^k = T^k (I - P) because P is an idempotent commuting with T; spot-check k = 2.
  const double square_defect = max_abs(ap.s * ap.s - left.apply(ap.s));
  if (square_defect > kProjTol) {
    throw Error(ErrorKind::TheoremViolation, "S^2 != T^2 (I - P): " + std::to_string(square_defect));
  }
  const std::uint64_t checks = std::min<std::uint64_t>(2 * ap.period, 16);
  for (std::uint64_t k = 1; k <= checks; ++k) {
    ap.periodicity_residual =
        std::max(ap.periodicity_residual, max_abs(power_apply(t, k + ap.period, q) - power_apply(t, k, q)));
  }
  if (ap.periodicity_residual > kProjTol) {
    throw Error(ErrorKind::TheoremViolation, "S^{n+N} != S^n: residual " + std::to_string(ap.periodicity_residual));
  }

  CDense tn = id;
  CDense sn = q;
  CDense shift = power_apply(t, ap.period, id) - id;  // T^n (T^N - I)
  for (std::size_t k = 1; k <= horizon; ++k) {
    tn = left.apply(tn);
    sn = left.apply(sn);
    shift = left.apply(shift);
    ap.tn_minus_sn.push_back(sup_norm(tn - sn));
    ap.power_deviation.push_back(sup_norm(shift));
  }
  ap.floor = 1e-10 * std::max(1.0, sup_norm(d.projection));
  ap.fit = geometric_decay_fit(ap.tn_minus_sn, ap.floor);
  if (std::isfinite(ap.fit.slope) && ap.fit.slope > std::log(d.contour_radius) + 0.1) {
    throw Error(ErrorKind::TheoremViolation, "||T^n - S^n|| decays with slope " + std::to_string(ap.fit.slope) +
                                                 ", slower than log(rho) + 0.1");
  }
  return ap;
}

void ErgodicityReport::require_consistent() const {
  if (consistent) return;
  throw Error(ErrorKind::TheoremViolation,
              std::string("equivalence verdicts disagree: (i) one isolated = ") + (one_isolated ? "true" : "false") +
                  ", (ii) uniformly almost periodic = " + (uniformly_almost_periodic ? "true" : "false") +
                  " [" + almost_periodic_reason + "], (iii) uniformly mean ergodic = " +
                  to_string(mean_ergodic.verdict) + " [" + mean_ergodic.reason + "]");
}

ErgodicityReport equivalence_harness(const ComplexMatrix& t, const EquivalenceOptions& options) {
  ErgodicityReport rep;
  const auto spectrum = eigen(t, {.geometric = false});
  require_lattice_unit_radius(t, spectrum);

  // (i) spectrum only.
  rep.gap_at_one = spectrum.gap_at_one;
  rep.one_isolated = is_one_isolated(spectrum, options.isolation_delta);

  // (ii) construct the decomposition regardless of the isolation verdict.
  try {
    DecomposeOptions dopts;
    dopts.isolation_delta = options.isolation_delta;
    dopts.require_isolation = false;
    dopts.decay_horizon = options.horizon;
    rep.decomposition = decompose(t, dopts);
    rep.approximant = almost_periodic_approximant(t, *rep.decomposition, options.horizon);
    rep.uniformly_almost_periodic = true;
    rep.almost_periodic_reason = "S = T(I - P) has period " + std::to_string(rep.approximant->period);
  } catch (const Error& e) {
    if (!recoverable(e)) throw;
    rep.uniformly_almost_periodic = false;
    rep.almost_periodic_reason = std::string(to_string(e.kind())) + ": " + e.what();
  }

  // (iii) Cesàro sequence only.
  rep.mean_ergodic = uniform_mean_ergodic_test(t, options.cesaro_n_max, options.cesaro_tol);

  const Verdict expected = rep.one_isolated ? Verdict::True : Verdict::False;
  rep.consistent = rep.one_isolated == rep.uniformly_almost_periodic && rep.mean_ergodic.verdict == expected;
  return rep;
}

NilpotencyResult nilpotency_index(const ComplexMatrix& t, const Decomposition& d) {
  NilpotencyResult out;
  const auto n = static_cast<Eigen::Index>(t.size());
  const CVector ones = CVector::Ones(n);
  out.applicable = (t.dense() * ones - ones).cwiseAbs().maxCoeff() <= 1e-10;

  const auto& support = d.stab_support;
  const auto m = static_cast<Eigen::Index>(support.size());
  if (m == 0) {
    out.index = 0;
    return out;
  }
  CDense restricted(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      restricted(i, j) = t(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
    }
  }
  const LeftMultiplier left(restricted);
  CDense power = CDense::Identity(m, m);
  for (Eigen::Index k = 1; k <= m; ++k) {
    power = left.apply(power);
    out.norms.push_back(sup_norm(power));
    if (out.norms.back() <= 1e-10) {
      out.index = static_cast<std::size_t>(k);
      break;
    }
  }
  out.violation = out.applicable && !out.index;
  return out;
}

TopologicalConsistency koopman_consistency_topological(const FiniteMap& map) {
  const auto op = koopman_matrix(map);
  const ComplexMatrix& t = op.matrix();
  TopologicalConsistency out{.gap_at_one = 0.0,
                             .spectral = {},
                             .combinatorial = eventual_period(map),
                             .periodic_points = 0,
                             .per_dimension = 0,
                             .decomposition = decompose(t)};
  const auto& d = out.decomposition;
  out.gap_at_one = d.spectrum.gap_at_one;
  const auto nil = nilpotency_index(t, d);
  if (!nil.applicable || !nil.index) {
    throw Error(ErrorKind::TheoremViolation, "Koopman operator is not nilpotent on I_stab");
  }
  out.spectral = EventualPeriod{*nil.index, d.period};
  const auto cs = cycle_structure(map);
  out.periodic_points = cs.periodic_points.size();
  out.per_dimension = d.per_dimension();
  if (out.spectral != out.combinatorial) {
    throw Error(ErrorKind::TheoremViolation,
                "spectral (k, p) = (" + std::to_string(out.spectral.preperiod) + ", " +
                    std::to_string(out.spectral.period) + ") but the map has (" +
                    std::to_string(out.combinatorial.preperiod) + ", " + std::to_string(out.combinatorial.period) + ")");
  }
  if (out.per_dimension != out.periodic_points) {
    throw Error(ErrorKind::TheoremViolation, "dim E_per != number of periodic points");
  }
  const auto n = static_cast<Eigen::Index>(t.size());
  const CDense id = CDense::Identity(n, n);
  const auto k = out.combinatorial.preperiod;
  if (max_abs(power_apply(t, k + out.combinatorial.period, id) - power_apply(t, k, id)) != 0.0) {
    throw Error(ErrorKind::TheoremViolation, "T^{k+p} != T^k");
  }
  return out;
}

PropositionVerdict proposition_check(const ComplexMatrix& t, const CVector& h, const NormKind& kind,
                                     std::size_t n_contract) {
  if (static_cast<std::size_t>(h.size()) != t.size()) throw Error(ErrorKind::InvalidInput, "h has the wrong size");
  const auto spectrum = eigen(t, {.geometric = false});
  require_lattice_unit_radius(t, spectrum);
  if (!is_one_isolated(spectrum)) throw Error(ErrorKind::InvalidHypothesis, "1 is not isolated");

  PropositionVerdict out;
  if (!quasi_interior_check(h)) {
    out.reason = "h is not quasi-interior";
    return out;
  }
  const CVector th = t.dense() * h;
  for (Eigen::Index i = 0; i < th.size(); ++i) {
    if (th(i).real() > h(i).real() + 1e-10 || std::abs(th(i).imag()) > 1e-10) {
      out.reason = "T h <= h fails at coordinate " + std::to_string(i);
      return out;
    }
  }
  if (kind.tag() == NormKind::Tag::Sup) {
    out.reason = "the sup norm is not strictly monotone";
    return out;
  }
  const LeftMultiplier left(t.dense());
  CDense power = CDense::Identity(th.size(), th.size());
  for (std::size_t m = 1; m <= n_contract; ++m) {
    power = left.apply(power);
    if (operator_norm(power, kind) <= 1.0 + 1e-10) {
      out.contraction_power = m;
      break;
    }
  }
  if (out.contraction_power == 0) {
    out.reason = "no power T^m with m <= " + std::to_string(n_contract) + " is a contraction in " + kind.name();
    return out;
  }
  if (!spectral_periodicity_test(t)) {
    throw Error(ErrorKind::TheoremViolation, "hypotheses hold but T is not periodic");
  }
  out.status = PropositionStatus::Periodic;
  out.period = spectral_period(spectrum);
  out.reason = "hypotheses hold";
  return out;
}

MeasureConsistency koopman_consistency_measure(const FiniteMap& map, const FiniteMeasure& mu, const NormKind& kind) {
  if (!is_measure_preserving(map, mu)) throw Error(ErrorKind::InvalidHypothesis, "map does not preserve the measure");
  if (!map.is_bijection()) throw Error(ErrorKind::TheoremViolation, "measure-preserving map is not a bijection");
  const auto op = koopman_matrix(map);
  const ComplexMatrix& t = op.matrix();
  MeasureConsistency out;
  out.operator_norm = operator_norm(t, kind);
  if (std::abs(out.operator_norm - 1.0) > 1e-10) {
    throw Error(ErrorKind::TheoremViolation, "||T|| = " + std::to_string(out.operator_norm) + " != 1");
  }
  const auto n = static_cast<Eigen::Index>(t.size());
  if (max_abs(t.dense() * CVector::Ones(n) - CVector::Ones(n)) != 0.0) {
    throw Error(ErrorKind::TheoremViolation, "T 1 != 1");
  }
  const auto spectrum = eigen(t, {.geometric = false});
  out.gap_at_one = spectrum.gap_at_one;
  if (!is_one_isolated(spectrum)) throw Error(ErrorKind::TheoremViolation, "1 is not isolated");
  if (!spectral_periodicity_test(t)) throw Error(ErrorKind::TheoremViolation, "Koopman operator is not periodic");
  out.spectral_period = spectral_period(spectrum);
  out.combinatorial_period = cycle_structure(map).period;
  if (out.spectral_period != out.combinatorial_period) {
    throw Error(ErrorKind::TheoremViolation, "spectral period " + std::to_string(out.spectral_period) +
                                                 " != lcm of cycle lengths " +
                                                 std::to_string(out.combinatorial_period));
  }
  return out;
}

std::uint64_t spectral_period(const SpectrumReport& report) {
  const auto ps = peripheral_spectrum(report);
  std::uint64_t n_period = 1;
  for (const auto& o : ps.orders) n_period = lcm_checked(n_period, *o);
  return n_period;
}

}  // namespace uergo
