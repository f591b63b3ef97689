// Acceptance suite: one PASS/FAIL line per criterion. Exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "uergo/ergodic.hpp"
#include "uergo/error.hpp"
#include "uergo/generators.hpp"
#include "uergo/latops.hpp"
#include "uergo/pipeline.hpp"
#include "uergo/sweep.hpp"

using namespace uergo;

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const Outcome& o, double seconds) {
  std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, title, o, std::chrono::duration<double>(Clock::now() - t0).count());
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double distance_to_one(const SpectrumReport& rep) {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& z : rep.eigenvalues) best = std::min(best, std::abs(z - 1.0));
  return best;
}

// Shared state across criteria.
SweepResult map_sweep;
SweepResult weighted_sweep;
SweepResult measure_sweep;
std::vector<double> gallery_eig_diffs;     // criterion 5 inputs from criteria 1-2
std::vector<double> gallery_residuals;
std::vector<double> gallery_cesaro;        // criterion 7 inputs from criteria 1-2
std::vector<double> one_distances;         // criterion 10 inputs outside the sweeps

struct Counts {
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::string first_failure;
};

Counts count(const SweepResult& r, const std::vector<std::string>& invariants) {
  Counts c;
  for (const auto& row : r.rows) {
    bool ok = row.outcome != uergo::Outcome::Error;
    for (const auto& name : invariants) ok = ok && row.invariant(name);
    if (ok) {
      ++c.pass;
    } else {
      ++c.fail;
      if (c.first_failure.empty()) {
        c.first_failure = std::string(to_string(row.cls)) + " #" + std::to_string(row.index) + ": " + row.detail;
      }
    }
  }
  return c;
}

double core_seconds(const SweepResult& r) {
  double s = 0.0;
  for (const auto& row : r.rows) s += row.core_seconds;
  return s;
}

double max_metric(const SweepResult& r, const std::string& name) {
  double m = 0.0;
  for (const auto& row : r.rows) {
    const double v = row.metric(name);
    if (!std::isnan(v)) m = std::max(m, v);
  }
  return m;
}

double min_metric(const SweepResult& r, const std::string& name) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& row : r.rows) {
    const double v = row.metric(name);
    if (!std::isnan(v)) m = std::min(m, v);
  }
  return m;
}

// Eigen-projection difference, residuals and Cesàro exponent of a gallery
// operator, feeding criteria 5, 7 and 10.
void gallery_side_checks(const ComplexMatrix& t, const Decomposition& d) {
  // Independent eigenprojection: I minus the projection onto the peripheral
  // eigenspaces along the rest.
  const auto dim = static_cast<Eigen::Index>(t.size());
  const CDense eig = CDense::Identity(dim, dim) - eigenvector_spectral_projection(t, d.peripheral.values);
  gallery_eig_diffs.push_back(max_abs(d.projection - eig));
  gallery_residuals.push_back(std::max(d.idempotency_residual, d.commutation_residual));
  const auto seq = cesaro_averages(t, 512);
  gallery_cesaro.push_back(power_law_fit(seq.deviations, 1, 64, 512, 1e-13).exponent);
  one_distances.push_back(distance_to_one(d.spectrum));
}

Outcome criterion1() {
  const auto g = gallery("am_diag_half_one");
  const auto spectrum = eigen(g.op);
  const Complex expected[] = {1.0, 0.5};
  const auto sm = match_spectrum(spectrum, expected);
  const bool sigma_ok = sm.matches && spectrum.distinct.size() == 2 && sm.worst_distance <= 1e-8;
  const auto d = decompose(g.op);
  const bool stab_ok = d.stab_dimension() == 1 && d.stab_support == std::vector<std::size_t>{0};
  const bool periodic = spectral_periodicity_test(g.op);
  // T restricted to I_stab: powers are 2^-n, never exactly zero.
  const CDense r = d.stab_basis.adjoint() * g.op.dense() * d.stab_basis;
  CDense power = r;
  bool never_zero = true;
  for (int n = 1; n <= 1000; ++n) {
    never_zero = never_zero && max_abs(power) > 0.0;
    power = power * r;
  }
  gallery_side_checks(g.op, d);
  Outcome o;
  o.pass = sigma_ok && stab_ok && !periodic && never_zero;
  o.detail = "sigma={1/2,1} err " + fmt("%.1e", sm.worst_distance) + ", I_stab=span{e0} " + (stab_ok ? "yes" : "no") +
             ", periodic=" + (periodic ? "true" : "false") + ", (T|I)^n != 0 for n<=1000 " + (never_zero ? "yes" : "no");
  return o;
}

Outcome criterion2() {
  const auto g = gallery("l1_constant_map");
  const auto spectrum = eigen(g.op);
  const Complex expected[] = {1.0, 0.0};
  const auto sm = match_spectrum(spectrum, expected);
  const bool sigma_ok = sm.matches && spectrum.distinct.size() == 2 && sm.worst_distance <= 1e-8;
  const double norm = operator_norm(g.op, g.norm);
  const auto d = decompose(g.op);
  const auto nil = nilpotency_index(g.op, d);
  const auto ep = eventual_period(*g.map);
  const bool ev_ok = nil.index && *nil.index == 1 && d.period == 1 && ep == EventualPeriod{1, 1};
  const bool periodic = spectral_periodicity_test(g.op);
  gallery_side_checks(g.op, d);
  Outcome o;
  o.pass = sigma_ok && norm == 2.0 && ev_ok && !periodic;
  o.detail = "sigma={0,1} err " + fmt("%.1e", sm.worst_distance) + ", ||T||_1 = " + fmt("%.17g", norm) +
             ", (k,p) = (" + (nil.index ? std::to_string(*nil.index) : "none") + "," + std::to_string(d.period) +
             "), spectral_periodicity_test=" + (periodic ? "true" : "false");
  return o;
}

Outcome criterion3() {
  SweepConfig cfg;
  cfg.seed = kSeed;
  cfg.classes = {{SweepClass::Map, 1000, 1, 200, true}};
  map_sweep = run_sweep(cfg);
  const auto c = count(map_sweep, {"oracle_period", "oracle_per_dimension", "oracle_nilpotency", "projection_residuals"});
  const double secs = core_seconds(map_sweep);
  Outcome o;
  o.pass = c.fail == 0 && secs < 180.0;
  o.detail = std::to_string(c.pass) + "/1000 maps match (N, dim E_per, nilpotency index), max residual " +
             fmt("%.1e", std::max(max_metric(map_sweep, "idempotency_residual"),
                                  max_metric(map_sweep, "commutation_residual"))) +
             ", check time " + fmt("%.1f s", secs) + " (limit 180 s)";
  if (!c.first_failure.empty()) o.detail += "; first failure " + c.first_failure;
  return o;
}

Outcome criterion4() {
  SweepConfig cfg;
  cfg.seed = kSeed;
  cfg.classes = {{SweepClass::Weighted, 1000, 1, 40, true}};
  weighted_sweep = run_sweep(cfg);
  const auto c = count(weighted_sweep, {"equivalence_consistent", "verdicts_true"});
  const double secs = core_seconds(weighted_sweep);
  Outcome o;
  o.pass = c.fail == 0 && secs < 300.0 && min_metric(weighted_sweep, "gap_at_one") >= 0.1;
  o.detail = std::to_string(c.pass) + "/1000 weighted instances with (i)=(ii)=(iii), min gap " +
             fmt("%.3f", min_metric(weighted_sweep, "gap_at_one")) + ", check time " + fmt("%.1f s", secs) +
             " (limit 300 s)";
  if (!c.first_failure.empty()) o.detail += "; first failure " + c.first_failure;
  return o;
}

Outcome criterion5() {
  const auto cm = count(map_sweep, {"contour_matches_eigenprojection", "projection_residuals"});
  const auto cw = count(weighted_sweep, {"contour_matches_eigenprojection", "projection_residuals"});
  double gal_diff = 0.0;
  double gal_res = 0.0;
  for (double x : gallery_eig_diffs) gal_diff = std::max(gal_diff, x);
  for (double x : gallery_residuals) gal_res = std::max(gal_res, x);
  const double worst = std::max({gal_diff, max_metric(map_sweep, "eigenprojection_difference"),
                                 max_metric(weighted_sweep, "eigenprojection_difference")});
  const double worst_res = std::max({gal_res, max_metric(map_sweep, "idempotency_residual"),
                                     max_metric(map_sweep, "commutation_residual"),
                                     max_metric(weighted_sweep, "idempotency_residual"),
                                     max_metric(weighted_sweep, "commutation_residual")});
  Outcome o;
  o.pass = cm.fail == 0 && cw.fail == 0 && gal_diff <= 1e-8 && gal_res <= 1e-8;
  o.detail = std::to_string(cm.pass + cw.pass + gallery_eig_diffs.size()) + "/" +
             std::to_string(map_sweep.rows.size() + weighted_sweep.rows.size() + gallery_eig_diffs.size()) +
             " instances, max |P_contour - P_eig| " + fmt("%.1e", worst) + ", max residual " + fmt("%.1e", worst_res);
  if (!cm.first_failure.empty()) o.detail += "; first failure " + cm.first_failure;
  if (!cw.first_failure.empty()) o.detail += "; first failure " + cw.first_failure;
  return o;
}

Outcome criterion6() {
  const auto cm = count(map_sweep, {"approximant_decay"});
  const auto cw = count(weighted_sweep, {"approximant_decay"});
  std::size_t checked = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // slope - (log rho_int + 0.1)
  for (const auto& row : weighted_sweep.rows) {
    const double ir = row.metric("interior_radius");
    if (std::isnan(ir) || ir > 0.9) continue;
    ++checked;
    const double slope = row.metric("decay_slope");
    if (std::isfinite(slope)) worst_margin = std::max(worst_margin, slope - (std::log(ir) + 0.1));
  }
  Outcome o;
  o.pass = cm.fail == 0 && cw.fail == 0;
  o.detail = std::to_string(cw.pass) + "/" + std::to_string(weighted_sweep.rows.size()) +
             " weighted slopes <= log(rho_int)+0.1 (" + std::to_string(checked) + " with rho_int <= 0.9, worst margin " +
             fmt("%.3f", worst_margin) + "), " + std::to_string(cm.pass) + "/" +
             std::to_string(map_sweep.rows.size()) + " maps with ||T^n - S^n|| <= 1e-10 for n >= preperiod (max " +
             fmt("%.1e", max_metric(map_sweep, "deviation_after_preperiod")) + ")";
  if (!cm.first_failure.empty()) o.detail += "; first failure " + cm.first_failure;
  if (!cw.first_failure.empty()) o.detail += "; first failure " + cw.first_failure;
  return o;
}

Outcome criterion7() {
  const auto cm = count(map_sweep, {"cesaro_decay"});
  const auto cw = count(weighted_sweep, {"cesaro_decay"});
  double gal_min = std::numeric_limits<double>::infinity();
  for (double x : gallery_cesaro) gal_min = std::min(gal_min, x);
  const double min_exp =
      std::min({gal_min, min_metric(map_sweep, "cesaro_exponent"), min_metric(weighted_sweep, "cesaro_exponent")});

  // J_2(1): rejected at the gate; with the gate bypassed ||A_n|| = (n + 1)/2.
  const ComplexMatrix j2 = jordan_block(2);
  const bool rejected = !check_lattice_homomorphism(j2).is_lattice_hom;
  bool decompose_rejects = false;
  try {
    decompose(j2);
  } catch (const Error& e) {
    decompose_rejects = e.kind() == ErrorKind::NotALatticeHomomorphism;
  }
  const auto seq = cesaro_averages(j2, 4096, NormKind::sup(), {.keep_averages = false, .spectral_limit = false});
  bool linear_growth = !seq.norms.empty();
  for (std::size_t k = 0; k < seq.norms.size(); ++k) {
    linear_growth = linear_growth && seq.norms[k] >= 0.5 * static_cast<double>(k + 1);
  }
  Outcome o;
  o.pass = cm.fail == 0 && cw.fail == 0 && gal_min >= 0.9 && rejected && decompose_rejects && linear_growth;
  o.detail = std::to_string(cm.pass + cw.pass + gallery_cesaro.size()) + "/" +
             std::to_string(map_sweep.rows.size() + weighted_sweep.rows.size() + gallery_cesaro.size()) +
             " decomposable instances with exponent >= 0.9 (min " + fmt("%.3f", min_exp) + "); J2(1) gate " +
             (rejected && decompose_rejects ? "rejects" : "ACCEPTS") + ", ||A_4096|| = " +
             fmt("%.1f", seq.norms.empty() ? 0.0 : seq.norms.back()) + (linear_growth ? " (>= n/2 for all n)" : "");
  return o;
}

Outcome criterion8() {
  SweepConfig cfg;
  cfg.seed = kSeed;
  cfg.classes = {{SweepClass::Permutation, 500, 1, 200, false}, {SweepClass::NonBijective, 500, 2, 200, false}};
  measure_sweep = run_sweep(cfg);
  SweepResult perms;
  SweepResult others;
  for (const auto& row : measure_sweep.rows) (row.cls == SweepClass::Permutation ? perms : others).rows.push_back(row);
  const auto cp = count(perms, {"measure_preserving", "norm_one", "one_isolated", "period_matches"});
  const auto cn = count(others, {"flagged_not_preserving", "consistency_rejects"});
  const double secs = core_seconds(measure_sweep);
  double worst_norm = 0.0;
  for (const auto& row : perms.rows) {
    worst_norm = std::max({worst_norm, std::abs(row.metric("l1_norm") - 1.0), std::abs(row.metric("l2_norm") - 1.0)});
  }
  Outcome o;
  o.pass = cp.fail == 0 && cn.fail == 0 && perms.rows.size() == 500 && others.rows.size() == 500 && secs < 120.0;
  o.detail = std::to_string(cp.pass) + "/500 permutations (max | ||T||_p - 1 | " + fmt("%.1e", worst_norm) +
             ", isolated, N = lcm), " + std::to_string(cn.pass) + "/500 non-bijective maps flagged, check time " +
             fmt("%.1f s", secs) + " (limit 120 s)";
  if (!cp.first_failure.empty()) o.detail += "; first failure " + cp.first_failure;
  if (!cn.first_failure.empty()) o.detail += "; first failure " + cn.first_failure;
  return o;
}

Outcome criterion9() {
  std::vector<std::size_t> sizes;
  for (std::size_t n = 4; n <= 64; ++n) sizes.push_back(n);
  const auto rows = truncation_study(sizes);
  bool monotone = true;
  bool half = true;
  bool norm_ok = true;
  double worst_norm = 0.0;
  std::optional<std::size_t> prev;
  for (const auto& row : rows) {
    monotone = monotone && row.nilpotency_index && (!prev || *row.nilpotency_index > *prev);
    half = half && row.nilpotency_index && 2 * *row.nilpotency_index >= row.n;
    worst_norm = std::max(worst_norm, std::abs(row.restricted_norm - 0.5));
    norm_ok = norm_ok && std::abs(row.restricted_norm - 0.5) <= 1e-10;
    prev = row.nilpotency_index;
    const auto g = gallery("l1_doubling_truncation", row.n);
    one_distances.push_back(distance_to_one(eigen(g.op, {.geometric = false})));
  }
  Outcome o;
  o.pass = monotone && half && norm_ok;
  o.detail = "n = 4..64: index strictly increasing " + std::string(monotone ? "yes" : "no") + ", index >= n/2 " +
             (half ? "yes" : "no") + " (index(64) = " +
             (rows.back().nilpotency_index ? std::to_string(*rows.back().nilpotency_index) : "none") +
             "), max | ||T|_I||_1 - 1/2 | " + fmt("%.1e", worst_norm);
  return o;
}

Outcome criterion10() {
  std::size_t total = 0;
  std::size_t bad = 0;
  for (const SweepResult* r : {&map_sweep, &weighted_sweep}) {
    for (const auto& row : r->rows) {
      ++total;
      if (!row.invariant("one_in_spectrum")) ++bad;
    }
  }
  for (const auto& row : measure_sweep.rows) {
    if (row.cls != SweepClass::Permutation) continue;
    ++total;
    if (!row.invariant("one_in_spectrum")) ++bad;
  }
  double worst = 0.0;
  for (double d : one_distances) {
    ++total;
    worst = std::max(worst, d);
    if (d > 1e-6) ++bad;
  }
  for (const auto& name : {"c_limit_truncation"}) {
    const auto g = gallery(name, 8);
    const double d = distance_to_one(eigen(g.op, {.geometric = false}));
    ++total;
    worst = std::max(worst, d);
    if (d > 1e-6) ++bad;
  }
  Outcome o;
  o.pass = bad == 0 && total > 0;
  o.detail = std::to_string(total - bad) + "/" + std::to_string(total) +
             " valid instances with an eigenvalue within 1e-6 of 1 (gallery max distance " + fmt("%.1e", worst) + ")";
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance suite, seed %llu, %zu thread(s)\n", static_cast<unsigned long long>(kSeed),
              default_thread_count());
  run(1, "am_diag_half_one", criterion1);
  run(2, "l1_constant_map", criterion2);
  run(3, "oracle equivalence, random maps", criterion3);
  run(4, "equivalence harness, weighted instances", criterion4);
  run(5, "contour vs eigenprojection", criterion5);
  run(6, "almost-periodic decay", criterion6);
  run(7, "Cesàro decay and J2(1) control", criterion7);
  run(8, "measure-preserving suite", criterion8);
  run(9, "doubling truncation study", criterion9);
  run(10, "1 in the spectrum", criterion10);
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
