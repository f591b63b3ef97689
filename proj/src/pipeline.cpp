#include "uergo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "uergo/latops.hpp"

namespace uergo {

using nlohmann::json;

namespace {

constexpr double kUnitTol = 1e-10;

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

// Non-finite values are not representable in JSON; report them as strings.
json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json spectrum_json(const SpectrumReport& rep) {
  json distinct = json::array();
  for (const auto& sv : rep.distinct) {
    json v = {{"value", complex_json(sv.value)}, {"algebraic", sv.algebraic_multiplicity}};
    if (rep.geometric_computed) v["geometric"] = sv.geometric_multiplicity;
    distinct.push_back(std::move(v));
  }
  return {{"dimension", rep.dimension},
          {"spectral_radius", rep.spectral_radius},
          {"gap_at_one", num(rep.gap_at_one)},
          {"residual_bound", rep.residual_bound},
          {"distinct", std::move(distinct)}};
}

double distance_to_one(const SpectrumReport& rep) {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& z : rep.eigenvalues) best = std::min(best, std::abs(z - 1.0));
  return best;
}

json mean_ergodic_json(const MeanErgodicResult& m) {
  return {{"verdict", to_string(m.verdict)},
          {"raw_defect", num(m.raw_defect)},
          {"extrapolated_defect", num(m.extrapolated_defect)},
          {"doublings", m.doublings},
          {"projection_residual", num(m.projection_residual)},
          {"fixed_residual", num(m.fixed_residual)},
          {"reason", m.reason}};
}

json decomposition_json(const ComplexMatrix& t, const Decomposition& d) {
  json peripheral = json::array();
  for (std::size_t i = 0; i < d.peripheral.values.size(); ++i) {
    json v = {{"value", complex_json(d.peripheral.values[i])}};
    v["order"] = d.peripheral.orders[i] ? json(*d.peripheral.orders[i]) : json(nullptr);
    peripheral.push_back(std::move(v));
  }
  const double rho = d.contour_radius;
  // Independent eigenprojection: I minus the projection onto the peripheral
  // eigenspaces along the rest.
  const auto dim = static_cast<Eigen::Index>(t.size());
  const CDense eig = CDense::Identity(dim, dim) - eigenvector_spectral_projection(t, d.peripheral.values);
  return {{"contour_radius", rho},
          {"quadrature_nodes", d.quadrature_nodes},
          {"interior_radius", d.peripheral.interior_radius},
          {"stab_dimension", d.stab_dimension()},
          {"per_dimension", d.per_dimension()},
          {"stab_support", d.stab_support},
          {"period", d.period},
          {"periodicity_residual", d.periodicity_residual},
          {"idempotency_residual", d.idempotency_residual},
          {"commutation_residual", d.commutation_residual},
          {"eigenprojection_difference", max_abs(d.projection - eig)},
          {"stability_rate", d.stability_rate},
          {"stability_constant", d.stability_constant},
          {"peripheral", std::move(peripheral)}};
}

// Cycles whose geometric-mean weight is 1: the states that carry E_per.
std::size_t oracle_peripheral_states(const WeightedCompositionOperator& op) {
  const auto cs = cycle_structure(op.map());
  std::size_t count = 0;
  for (const auto& c : cs.cycles) {
    double log_product = 0.0;
    for (State s : c.states) log_product += std::log(op.weights()[s]);
    if (std::abs(std::exp(log_product / static_cast<double>(c.length())) - 1.0) <= 1e-6) count += c.length();
  }
  return count;
}

std::string format_cell(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9e", x);
  return buf;
}

std::string render_decay_csv(const std::vector<double>& cesaro, const Approximant* ap) {
  std::ostringstream os;
  os << "n,cesaro_deviation,power_deviation,tn_minus_sn\n";
  std::size_t rows = cesaro.size();
  if (ap) rows = std::max({rows, ap->power_deviation.size(), ap->tn_minus_sn.size()});
  for (std::size_t k = 0; k < rows; ++k) {
    os << k + 1 << ',';
    if (k < cesaro.size()) os << format_cell(cesaro[k]);
    os << ',';
    if (ap && k < ap->power_deviation.size()) os << format_cell(ap->power_deviation[k]);
    os << ',';
    if (ap && k < ap->tn_minus_sn.size()) os << format_cell(ap->tn_minus_sn[k]);
    os << '\n';
  }
  return os.str();
}

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorKind::TheoremViolation, what); }

void run_pipeline(const Instance& inst, const AnalyzeOptions& options, json& rep, std::string& csv) {
  const ComplexMatrix& t = inst.op;

  const auto lattice = check_lattice_homomorphism(t);
  rep["lattice"] = {{"is_lattice_homomorphism", lattice.is_lattice_hom},
                    {"structural", lattice.structural},
                    {"sampled", lattice.sampled},
                    {"violation", lattice.violation}};
  if (!lattice.is_lattice_hom) throw Error(ErrorKind::NotALatticeHomomorphism, lattice.reason);

  const SpectrumReport spectrum = eigen(t);
  rep["spectrum"] = spectrum_json(spectrum);
  rep["spectrum"]["operator_norm"] = operator_norm(t, inst.norm);
  rep["spectrum"]["norm"] = inst.norm.name();
  if (std::abs(spectrum.spectral_radius - 1.0) > 1e-8) {
    throw Error(ErrorKind::InvalidHypothesis, "spectral radius " + std::to_string(spectrum.spectral_radius) +
                                                  " is not 1 within 1e-8 (set \"normalize\": true to rescale)");
  }
  // A lattice homomorphism with r(T) = 1 has 1 in its spectrum.
  const double d1 = distance_to_one(spectrum);
  rep["spectrum"]["one_in_spectrum"] = {{"holds", d1 <= 1e-6}, {"distance", d1}};
  if (d1 > 1e-6) violation("no eigenvalue within 1e-6 of 1 (distance " + std::to_string(d1) + ")");

  const ErgodicityReport er = equivalence_harness(t, options.equivalence);
  rep["ergodicity"] = {{"one_isolated", er.one_isolated},
                       {"gap_at_one", num(er.gap_at_one)},
                       {"uniformly_almost_periodic", er.uniformly_almost_periodic},
                       {"almost_periodic_reason", er.almost_periodic_reason},
                       {"mean_ergodic", mean_ergodic_json(er.mean_ergodic)},
                       {"consistent", er.consistent}};

  if (er.decomposition) {
    const Decomposition& d = *er.decomposition;
    rep["decomposition"] = decomposition_json(t, d);
    const bool periodic = spectral_periodicity_test(t);
    rep["decomposition"]["periodic"] = periodic;

    bool semisimple = true;
    for (const Complex& lambda : d.peripheral.values) semisimple = semisimple && semisimplicity_check(t, lambda);
    const CDense eigensum = peripheral_eigenspace_sum(t, d);
    rep["decomposition"]["peripheral_semisimple"] = semisimple;
    rep["decomposition"]["eigenspace_sum_residual"] = span_residual(eigensum, d.per_basis);
    if (!semisimple) throw Error(ErrorKind::SemisimplicityViolation, "peripheral eigenvalue with a Jordan block");

    const auto nil = nilpotency_index(t, d);
    if (nil.applicable) {
      rep["nilpotency"] = {{"index", nil.index ? json(*nil.index) : json(nullptr)}, {"violation", nil.violation}};
      if (nil.violation) violation("T restricted to I_stab is not nilpotent although T1 = 1");
      if (nil.index) rep["eventual_period"] = {{"preperiod", *nil.index}, {"period", d.period}};
    }
  }
  if (er.approximant) {
    const Approximant& ap = *er.approximant;
    const double ir = er.decomposition->peripheral.interior_radius;
    rep["approximant"] = {{"period", ap.period},
                          {"periodicity_residual", ap.periodicity_residual},
                          {"decay_slope", num(ap.fit.slope)},
                          {"slope_bound", ir > 0 ? num(std::log(ir) + 0.1) : json("-inf")},
                          {"zero_from", ap.fit.zero_from},
                          {"floor", ap.floor}};
  }
  if (!er.consistent) {
    violation(std::string("equivalence verdicts disagree: isolated=") + (er.one_isolated ? "true" : "false") +
              ", almost-periodic=" + (er.uniformly_almost_periodic ? "true" : "false") +
              ", mean-ergodic=" + to_string(er.mean_ergodic.verdict));
  }

  const auto seq = cesaro_averages(t, options.equivalence.cesaro_n_max);
  if (!seq.deviations.empty()) {
    const auto fit = power_law_fit(seq.deviations, 1, 64, options.equivalence.cesaro_n_max, 1e-13);
    rep["cesaro"] = {{"norm", "sup"},
                     {"exponent", num(fit.exponent)},
                     {"fit_points", fit.points},
                     {"final_deviation", seq.deviations.back()}};
  }
  csv = render_decay_csv(seq.deviations, er.approximant ? &*er.approximant : nullptr);

  // Oracle comparisons.
  json oracle = json::object();
  if (inst.spec.kind == InstanceKind::Map && inst.map) {
    const auto topo = koopman_consistency_topological(*inst.map);
    oracle["topological"] = {{"preperiod", topo.combinatorial.preperiod},
                             {"period", topo.combinatorial.period},
                             {"spectral_preperiod", topo.spectral.preperiod},
                             {"spectral_period", topo.spectral.period},
                             {"periodic_points", topo.periodic_points},
                             {"per_dimension", topo.per_dimension},
                             {"matches", true}};
    if (inst.measure) {
      const bool preserving = is_measure_preserving(*inst.map, *inst.measure);
      oracle["measure_preserving"] = preserving;
      if (preserving) {
        const auto mc = koopman_consistency_measure(*inst.map, *inst.measure, inst.norm);
        oracle["measure"] = {{"operator_norm", mc.operator_norm},
                             {"spectral_period", mc.spectral_period},
                             {"combinatorial_period", mc.combinatorial_period}};
      }
    }
  }
  if (inst.weighted) {
    const double r_cycles = inst.weighted->cycle_spectral_radius();
    oracle["cycle_spectral_radius"] = r_cycles;
    if (std::abs(r_cycles - spectrum.spectral_radius) > 1e-8) {
      violation("spectral radius " + std::to_string(spectrum.spectral_radius) + " differs from the cycle formula " +
                std::to_string(r_cycles));
    }
    if (er.decomposition) {
      const std::size_t per = oracle_peripheral_states(*inst.weighted);
      oracle["peripheral_states"] = per;
      if (per != er.decomposition->per_dimension()) {
        violation("dim E_per = " + std::to_string(er.decomposition->per_dimension()) + " but " +
                  std::to_string(per) + " states lie on unit-weight cycles");
      }
    }
  }
  rep["oracle"] = std::move(oracle);
}

}  // namespace

int exit_code_for(const Error& e) { return is_theorem_violation(e.kind()) ? kExitViolation : kExitInvalid; }

RunResult analyze(const Instance& inst, const AnalyzeOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  json& rep = out.report;
  rep["digest"] = instance_digest(inst.spec);
  rep["seed"] = options.seed ? json(*options.seed) : json(nullptr);
  rep["instance"] = {{"kind", to_string(inst.spec.kind)},
                     {"n", inst.spec.n},
                     {"norm", inst.spec.norm},
                     {"normalize", inst.spec.normalize},
                     {"scale", inst.scale}};
  try {
    run_pipeline(inst, options, rep, out.decay_csv);
    rep["status"] = "consistent";
    out.exit_code = kExitConsistent;
  } catch (const Error& e) {
    out.exit_code = exit_code_for(e);
    rep["status"] = out.exit_code == kExitViolation ? "theorem-violation" : "invalid-input";
    rep["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  }
  rep["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

json oracle_report(const Instance& inst) {
  if (!inst.map) throw Error(ErrorKind::InvalidInput, "oracle needs a map or weighted instance");
  const auto cs = cycle_structure(*inst.map);
  json cycles = json::array();
  for (const auto& c : cs.cycles) cycles.push_back(c.states);
  json rep = {{"digest", instance_digest(inst.spec)},
              {"n", inst.map->size()},
              {"preperiod", cs.preperiod},
              {"period", cs.period},
              {"periodic_points", cs.periodic_points.size()},
              {"cycles", std::move(cycles)},
              {"tail_height", cs.tail_height},
              {"bijection", inst.map->is_bijection()}};
  if (inst.measure) rep["measure_preserving"] = is_measure_preserving(*inst.map, *inst.measure);
  if (inst.weighted && inst.spec.kind == InstanceKind::Weighted) {
    rep["cycle_spectral_radius"] = inst.weighted->cycle_spectral_radius();
  }
  return rep;
}

SpectrumMatch match_spectrum(const SpectrumReport& report, std::span<const Complex> expected) {
  SpectrumMatch out;
  if (expected.empty()) return out;
  std::vector<std::size_t> hits(expected.size(), 0);
  std::vector<std::size_t> nearest(report.eigenvalues.size());
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < expected.size(); ++j) {
      if (std::abs(report.eigenvalues[i] - expected[j]) < std::abs(report.eigenvalues[i] - expected[best])) best = j;
    }
    nearest[i] = best;
    ++hits[best];
  }
  out.matches = true;
  for (std::size_t j = 0; j < expected.size(); ++j) {
    if (hits[j] == 0) out.matches = false;
  }
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i) {
    const std::size_t j = nearest[i];
    const double tol = std::max(1e-8, std::pow(4.0 * report.residual_bound, 1.0 / static_cast<double>(hits[j])));
    const double dist = std::abs(report.eigenvalues[i] - expected[j]);
    if (dist - tol > out.worst_distance - out.worst_tolerance) {
      out.worst_distance = dist;
      out.worst_tolerance = tol;
    }
    if (dist > tol) out.matches = false;
  }
  return out;
}

std::vector<TruncationRow> truncation_study(std::span<const std::size_t> sizes) {
  std::vector<TruncationRow> rows;
  for (std::size_t n : sizes) {
    const auto g = gallery("l1_doubling_truncation", n);
    const auto d = decompose(g.op);
    const auto nil = nilpotency_index(g.op, d);
    TruncationRow row;
    row.n = n;
    row.nilpotency_index = nil.index;
    row.idempotency_residual = d.idempotency_residual;
    row.commutation_residual = d.commutation_residual;
    // T on the tail ideal: coordinates 1..n with the restricted measure.
    const auto coords = doubling_tail_coordinates(n);
    const auto k = static_cast<Eigen::Index>(coords.size());
    CDense sub(k, k);
    std::vector<double> mass;
    for (Eigen::Index i = 0; i < k; ++i) {
      mass.push_back((*g.measure)[coords[static_cast<std::size_t>(i)]]);
      for (Eigen::Index j = 0; j < k; ++j) {
        sub(i, j) = g.op(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(j)]);
      }
    }
    row.restricted_norm = operator_norm(sub, NormKind::l1(FiniteMeasure(std::move(mass))));
    rows.push_back(row);
  }
  return rows;
}

RunResult analyze_gallery(std::string_view name, std::size_t n) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  std::optional<GalleryInstance> g;
  try {
    g = gallery(name, n);
  } catch (const Error& e) {
    out.exit_code = kExitInvalid;
    out.report = {{"gallery", std::string(name)},
                  {"status", "invalid-input"},
                  {"error", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}}};
    return out;
  }

  InstanceSpec spec = g->weighted ? weighted_spec(*g->weighted) : matrix_spec(g->op);
  if (g->map && std::all_of(g->weighted->weights().begin(), g->weighted->weights().end(),
                            [](double w) { return w == 1.0; })) {
    spec = map_spec(*g->map);
  }
  switch (g->norm.tag()) {
    case NormKind::Tag::Sup:
      spec.norm = "sup";
      break;
    case NormKind::Tag::L1:
      spec.norm = "l1";
      break;
    case NormKind::Tag::L2:
      spec.norm = "l2";
      break;
  }
  if (g->measure) spec.measure = std::vector<double>(g->measure->weights().begin(), g->measure->weights().end());
  out = analyze(build_instance(spec));
  json& rep = out.report;
  rep["gallery"] = {{"name", g->name}, {"truncation", g->truncation}};

  // Recorded expectations, asserted against fresh computations.
  json checks = json::array();
  bool all = true;
  auto check = [&](const std::string& what, bool ok, json detail) {
    checks.push_back({{"check", what}, {"pass", ok}, {"detail", std::move(detail)}});
    all = all && ok;
  };
  try {
    const GalleryExpectation& ex = g->expect;
    const SpectrumReport spectrum = eigen(g->op);
    const auto sm = match_spectrum(spectrum, ex.spectrum);
    check("spectrum", sm.matches, {{"worst_distance", sm.worst_distance}, {"tolerance", sm.worst_tolerance}});

    const bool isolated = is_one_isolated(spectrum);
    check("one_isolated", isolated == ex.one_isolated, isolated);
    const bool periodic = spectral_periodicity_test(g->op);
    check("periodic", periodic == ex.periodic, periodic);
    const CVector ones = CVector::Ones(static_cast<Eigen::Index>(g->op.size()));
    const double unit_defect = max_abs(g->op.dense() * ones - ones);
    check("unit_fixed", (unit_defect <= kUnitTol) == ex.unit_fixed, unit_defect);
    if (ex.operator_norm) {
      const double norm = operator_norm(g->op, g->norm);
      check("operator_norm", std::abs(norm - *ex.operator_norm) <= kUnitTol, norm);
    }
    const auto d = decompose(g->op);
    if (ex.stab_dimension) check("stab_dimension", d.stab_dimension() == *ex.stab_dimension, d.stab_dimension());
    if (ex.nilpotent_on_stab) {
      // Nilpotent iff R^dim = 0, R = T compressed to I_stab.
      const CDense r = d.stab_basis.adjoint() * g->op.dense() * d.stab_basis;
      const CDense rk = matrix_power(r, static_cast<std::uint64_t>(std::max<Eigen::Index>(r.rows(), 1)));
      const double rest = max_abs(rk);
      check("nilpotent_on_stab", (rest <= kUnitTol) == *ex.nilpotent_on_stab, rest);
    }
    if (ex.nilpotency_index || ex.eventual_period) {
      const auto nil = nilpotency_index(g->op, d);
      const json idx = nil.index ? json(*nil.index) : json(nullptr);
      if (ex.nilpotency_index) check("nilpotency_index", nil.index == ex.nilpotency_index, idx);
      if (ex.eventual_period) {
        const bool ok = nil.index && *nil.index == ex.eventual_period->preperiod && d.period == ex.eventual_period->period;
        check("eventual_period", ok, {{"preperiod", idx}, {"period", d.period}});
      }
    }
    if (g->name == "c_limit_truncation") {
      const double idem = max_abs(g->op.dense() * g->op.dense() - g->op.dense());
      check("T^2 = T", idem <= kUnitTol, idem);
    }
    if (g->name == "l1_doubling_truncation") {
      const std::size_t sizes[] = {4, 8, 16, 32, 64};
      const auto rows = truncation_study(sizes);
      json table = json::array();
      bool monotone = true;
      std::optional<std::size_t> prev;
      for (const auto& row : rows) {
        table.push_back({{"n", row.n},
                         {"nilpotency_index", row.nilpotency_index ? json(*row.nilpotency_index) : json(nullptr)},
                         {"restricted_norm", row.restricted_norm},
                         {"idempotency_residual", row.idempotency_residual}});
        const bool grows = row.nilpotency_index && 2 * *row.nilpotency_index >= row.n &&
                           (!prev || *row.nilpotency_index > *prev);
        monotone = monotone && grows;
        prev = row.nilpotency_index;
      }
      rep["truncation_study"] = table;
      check("nilpotency index grows with n", monotone, nullptr);
    }
  } catch (const Error& e) {
    check("no errors", false, e.what());
  }
  rep["gallery"]["checks"] = std::move(checks);
  if (!all && out.exit_code == kExitConsistent) {
    out.exit_code = kExitViolation;
    rep["status"] = "theorem-violation";
    rep["error"] = {{"kind", "theorem-violation"}, {"message", "gallery expectation failed"}};
  }
  rep["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace uergo
