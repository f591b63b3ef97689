#include "uergo/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "uergo/ergodic.hpp"
#include "uergo/error.hpp"
#include "uergo/generators.hpp"
#include "uergo/latops.hpp"

namespace uergo {

using nlohmann::json;

namespace {

constexpr double kProjTol = 1e-8;
constexpr double kExactZero = 1e-10;
constexpr double kUnitNormTol = 1e-10;
constexpr double kCesaroExponent = 0.9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double distance_to_one(const SpectrumReport& rep) {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& z : rep.eigenvalues) best = std::min(best, std::abs(z - 1.0));
  return best;
}

// Rows start with every invariant failed and every metric NaN, so errored
// rows keep the class's column layout.
class RowBuilder {
 public:
  RowBuilder(SweepRow& row, std::initializer_list<const char*> invariants, std::initializer_list<const char*> metrics)
      : row_(row) {
    for (const char* name : invariants) row_.invariants.emplace_back(name, false);
    for (const char* name : metrics) row_.metrics.emplace_back(name, std::numeric_limits<double>::quiet_NaN());
  }
  void add(std::initializer_list<const char*> invariants, std::initializer_list<const char*> metrics) {
    for (const char* name : invariants) row_.invariants.emplace_back(name, false);
    for (const char* name : metrics) row_.metrics.emplace_back(name, std::numeric_limits<double>::quiet_NaN());
  }
  void set(const std::string& name, bool value) {
    for (auto& [k, v] : row_.invariants) {
      if (k == name) {
        v = value;
        return;
      }
    }
    throw Error(ErrorKind::InternalInconsistency, "sweep row has no invariant " + name);
  }
  void metric(const std::string& name, double value) {
    for (auto& [k, v] : row_.metrics) {
      if (k == name) {
        v = value;
        return;
      }
    }
    throw Error(ErrorKind::InternalInconsistency, "sweep row has no metric " + name);
  }

 private:
  SweepRow& row_;
};

std::size_t draw_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, std::max(lo, hi))(rng);
}

// Criterion-style checks shared by the map and weighted classes.
void extended_checks(RowBuilder& b, const ComplexMatrix& t, const Decomposition& d, std::size_t preperiod,
                     bool koopman, std::size_t cesaro_n_max) {
  // Independent eigenprojection: I minus the projection onto the peripheral
  // eigenspaces along the rest.
  const auto dim = static_cast<Eigen::Index>(t.size());
  const CDense eig = CDense::Identity(dim, dim) - eigenvector_spectral_projection(t, d.peripheral.values);
  const double diff = max_abs(d.projection - eig);
  b.metric("eigenprojection_difference", diff);
  b.set("contour_matches_eigenprojection", diff <= kProjTol);

  const auto ap = almost_periodic_approximant(t, d, 64);
  const double ir = d.peripheral.interior_radius;
  b.metric("interior_radius", ir);
  b.metric("decay_slope", ap.fit.slope);
  // Slope bound applies when rho_int <= 0.9; log(0) = -inf demands exact decay.
  const bool slope_ok = ir > 0.9 || ap.fit.slope <= std::log(ir) + 0.1;
  bool zero_ok = true;
  if (koopman) {
    double worst = 0.0;
    for (std::size_t n = std::max<std::size_t>(preperiod, 1); n <= ap.tn_minus_sn.size(); ++n) {
      worst = std::max(worst, ap.tn_minus_sn[n - 1]);
    }
    b.metric("deviation_after_preperiod", worst);
    zero_ok = worst <= kExactZero;
  }
  b.set("approximant_decay", slope_ok && zero_ok);

  const auto seq = cesaro_averages(t, cesaro_n_max);
  const auto fit = power_law_fit(seq.deviations, 1, 64, cesaro_n_max, 1e-13);
  b.metric("cesaro_exponent", fit.exponent);
  b.set("cesaro_decay", !seq.overflow && fit.exponent >= kCesaroExponent);
}

void map_instance(SweepRow& row, Rng& rng, const SweepClassConfig& cfg, std::size_t cesaro_n_max) {
  RowBuilder b(row, {"oracle_period", "oracle_per_dimension", "oracle_nilpotency", "projection_residuals",
                     "one_in_spectrum"},
               {"preperiod", "period", "idempotency_residual", "commutation_residual"});
  if (cfg.extended) {
    b.add({"contour_matches_eigenprojection", "approximant_decay", "cesaro_decay"},
          {"eigenprojection_difference", "interior_radius", "decay_slope", "deviation_after_preperiod",
           "cesaro_exponent"});
  }
  row.n = draw_size(rng, std::max<std::size_t>(cfg.n_min, 1), cfg.n_max);
  const auto map = random_map(rng, row.n);
  const auto t0 = Clock::now();
  const auto cs = cycle_structure(map);
  b.metric("preperiod", static_cast<double>(cs.preperiod));
  b.metric("period", static_cast<double>(cs.period));
  const auto topo = koopman_consistency_topological(map);
  const Decomposition& d = topo.decomposition;
  b.set("oracle_period", d.period == cs.period && topo.spectral.period == cs.period);
  b.set("oracle_per_dimension", d.per_dimension() == cs.periodic_points.size() &&
                                    d.stab_dimension() == row.n - cs.periodic_points.size());
  b.set("oracle_nilpotency", topo.spectral.preperiod == cs.preperiod);
  b.metric("idempotency_residual", d.idempotency_residual);
  b.metric("commutation_residual", d.commutation_residual);
  b.set("projection_residuals", d.idempotency_residual <= kProjTol && d.commutation_residual <= kProjTol);
  b.set("one_in_spectrum", distance_to_one(d.spectrum) <= 1e-6);
  row.core_seconds = seconds_since(t0);
  if (cfg.extended) {
    const auto t1 = Clock::now();
    extended_checks(b, koopman_matrix(map).matrix(), d, cs.preperiod, true, cesaro_n_max);
    row.extended_seconds = seconds_since(t1);
  }
}

void weighted_instance(SweepRow& row, Rng& rng, const SweepClassConfig& cfg, std::size_t cesaro_n_max) {
  RowBuilder b(row, {"equivalence_consistent", "verdicts_true", "projection_residuals", "oracle_period",
                     "oracle_peripheral_states", "one_in_spectrum"},
               {"gap_at_one", "period", "idempotency_residual", "commutation_residual", "cesaro_defect"});
  if (cfg.extended) {
    b.add({"contour_matches_eigenprojection", "approximant_decay", "cesaro_decay"},
          {"eigenprojection_difference", "interior_radius", "decay_slope", "cesaro_exponent"});
  }
  const auto g = gapped_weighted(rng, cfg.n_max);
  row.n = g.op.size();
  const ComplexMatrix& t = g.op.matrix();
  const auto t0 = Clock::now();
  const auto er = equivalence_harness(t);
  b.metric("gap_at_one", er.gap_at_one);
  b.metric("cesaro_defect", er.mean_ergodic.extrapolated_defect);
  b.set("equivalence_consistent", er.consistent);
  b.set("verdicts_true",
        er.one_isolated && er.uniformly_almost_periodic && er.mean_ergodic.verdict == Verdict::True);
  if (er.decomposition) {
    const Decomposition& d = *er.decomposition;
    b.metric("period", static_cast<double>(d.period));
    b.metric("idempotency_residual", d.idempotency_residual);
    b.metric("commutation_residual", d.commutation_residual);
    b.set("projection_residuals", d.idempotency_residual <= kProjTol && d.commutation_residual <= kProjTol);
    b.set("oracle_period", d.period == g.period);
    b.set("oracle_peripheral_states", d.per_dimension() == g.peripheral_states);
    b.set("one_in_spectrum", distance_to_one(d.spectrum) <= 1e-6);
  }
  row.core_seconds = seconds_since(t0);
  if (cfg.extended && er.decomposition) {
    const auto t1 = Clock::now();
    extended_checks(b, t, *er.decomposition, 0, false, cesaro_n_max);
    row.extended_seconds = seconds_since(t1);
  }
}

void control_instance(SweepRow& row, Rng& rng, const SweepClassConfig& cfg, std::size_t cesaro_n_max) {
  RowBuilder b(row, {"rejected_at_gate", "decompose_rejects"}, {"violation"});
  const bool jordan = negative_control_kind(row.index) == ControlKind::JordanBlock;
  if (cfg.extended && jordan) b.add({"cesaro_unbounded"}, {"cesaro_growth"});
  const auto t0 = Clock::now();
  const auto m = negative_control(rng, row.index, std::max<std::size_t>(cfg.n_max, 2));
  row.n = m.size();
  const auto lattice = check_lattice_homomorphism(m);
  b.metric("violation", lattice.violation);
  b.set("rejected_at_gate", !lattice.is_lattice_hom);
  try {
    decompose(m);
  } catch (const Error& e) {
    b.set("decompose_rejects", e.kind() == ErrorKind::NotALatticeHomomorphism);
  }
  row.core_seconds = seconds_since(t0);
  if (cfg.extended && jordan) {
    // Gate bypassed: the averages of a Jordan block at 1 grow without bound.
    const auto seq = cesaro_averages(m, cesaro_n_max, NormKind::sup(), {.keep_averages = false, .spectral_limit = false});
    const double growth = seq.overflow ? std::numeric_limits<double>::infinity() : seq.norms.back() / seq.norms[63];
    b.metric("cesaro_growth", growth);
    b.set("cesaro_unbounded", seq.overflow || growth >= 4.0);
  }
}

// ||A_n f||_p <= ||f||_p for n <= 64 and a few random f, p = 1, 2.
bool averages_contract(const ComplexMatrix& t, const FiniteMeasure& mu, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(t.size());
  const Eigen::Map<const Eigen::VectorXd> w(mu.weights().data(), n);
  auto lp = [&](const CVector& f, int p) {
    const Eigen::VectorXd a = f.cwiseAbs();
    return p == 1 ? w.dot(a) : std::sqrt(w.dot(a.cwiseProduct(a)));
  };
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 3; ++trial) {
    CVector f(n);
    for (Eigen::Index i = 0; i < n; ++i) f(i) = Complex(gauss(rng), gauss(rng));
    CVector power = f;
    CVector sum = f;
    for (int k = 1; k <= 64; ++k) {
      const CVector avg = sum / static_cast<double>(k);
      for (int p : {1, 2}) {
        if (lp(avg, p) > lp(f, p) * (1.0 + 1e-12)) return false;
      }
      power = t.dense() * power;
      sum += power;
    }
  }
  return true;
}

void permutation_instance(SweepRow& row, Rng& rng, const SweepClassConfig& cfg) {
  RowBuilder b(row, {"measure_preserving", "norm_one", "one_isolated", "period_matches", "one_in_spectrum"},
               {"l1_norm", "l2_norm", "gap_at_one", "spectral_period", "combinatorial_period"});
  if (cfg.extended) b.add({"averages_contract"}, {});
  row.n = draw_size(rng, std::max<std::size_t>(cfg.n_min, 1), cfg.n_max);
  const auto map = random_permutation(rng, row.n);
  const auto mu = random_invariant_measure(rng, map);
  const auto t0 = Clock::now();
  b.set("measure_preserving", is_measure_preserving(map, mu));
  const auto l2 = koopman_consistency_measure(map, mu, NormKind::l2(mu));
  const auto t = koopman_matrix(map).matrix();
  const double l1 = operator_norm(t, NormKind::l1(mu));
  b.metric("l1_norm", l1);
  b.metric("l2_norm", l2.operator_norm);
  b.metric("gap_at_one", l2.gap_at_one);
  b.metric("spectral_period", static_cast<double>(l2.spectral_period));
  b.metric("combinatorial_period", static_cast<double>(l2.combinatorial_period));
  b.set("norm_one", std::abs(l1 - 1.0) <= kUnitNormTol && std::abs(l2.operator_norm - 1.0) <= kUnitNormTol);
  b.set("one_isolated", l2.gap_at_one >= 1e-4);
  b.set("period_matches", l2.spectral_period == l2.combinatorial_period);
  b.set("one_in_spectrum", distance_to_one(eigen(t, {.geometric = false})) <= 1e-6);
  row.core_seconds = seconds_since(t0);
  if (cfg.extended) {
    const auto t1 = Clock::now();
    b.set("averages_contract", averages_contract(t, mu, rng));
    row.extended_seconds = seconds_since(t1);
  }
}

void non_bijective_instance(SweepRow& row, Rng& rng, const SweepClassConfig& cfg) {
  RowBuilder b(row, {"flagged_not_preserving", "consistency_rejects"}, {});
  row.n = draw_size(rng, std::max<std::size_t>(cfg.n_min, 2), std::max<std::size_t>(cfg.n_max, 2));
  const auto map = random_non_bijective_map(rng, row.n);
  const auto mu = FiniteMeasure::uniform(row.n);
  const auto t0 = Clock::now();
  b.set("flagged_not_preserving", !is_measure_preserving(map, mu));
  try {
    koopman_consistency_measure(map, mu, NormKind::l1(mu));
  } catch (const Error& e) {
    b.set("consistency_rejects", e.kind() == ErrorKind::InvalidHypothesis);
  }
  row.core_seconds = seconds_since(t0);
}

std::uint64_t class_salt(SweepClass cls) { return static_cast<std::uint64_t>(cls) << 40; }

SweepClass parse_class(const std::string& name) {
  if (name == "map") return SweepClass::Map;
  if (name == "weighted") return SweepClass::Weighted;
  if (name == "control") return SweepClass::Control;
  if (name == "permutation") return SweepClass::Permutation;
  if (name == "non_bijective") return SweepClass::NonBijective;
  throw Error(ErrorKind::InvalidInput, "field 'class': unknown class \"" + name + "\"");
}

std::string cell(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

std::string csv_text(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

const char* to_string(SweepClass cls) {
  switch (cls) {
    case SweepClass::Map:
      return "map";
    case SweepClass::Weighted:
      return "weighted";
    case SweepClass::Control:
      return "control";
    case SweepClass::Permutation:
      return "permutation";
    case SweepClass::NonBijective:
      return "non_bijective";
  }
  return "map";
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Pass:
      return "pass";
    case Outcome::Fail:
      return "fail";
    case Outcome::Error:
      return "error";
  }
  return "error";
}

bool SweepRow::invariant(const std::string& name) const {
  for (const auto& [k, v] : invariants) {
    if (k == name) return v;
  }
  return false;
}

double SweepRow::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

SweepConfig parse_sweep_config(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::InvalidInput, "sweep config must be a JSON object");
  SweepConfig cfg;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw Error(ErrorKind::InvalidInput, "field 'seed': expected an unsigned integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("cesaro_n_max")) {
    // The decay exponent is fitted over n in [64, 512]; shorter windows are
    // biased by the oscillation of periodic parts.
    if (!doc["cesaro_n_max"].is_number_unsigned() || doc["cesaro_n_max"].get<std::size_t>() < 512) {
      throw Error(ErrorKind::InvalidInput, "field 'cesaro_n_max': expected an integer >= 512");
    }
    cfg.cesaro_n_max = doc["cesaro_n_max"].get<std::size_t>();
  }
  if (!doc.contains("classes") || !doc["classes"].is_array()) {
    throw Error(ErrorKind::InvalidInput, "field 'classes': required array");
  }
  std::size_t i = 0;
  for (const auto& c : doc["classes"]) {
    const std::string where = "classes[" + std::to_string(i++) + "]";
    if (!c.is_object() || !c.contains("class") || !c["class"].is_string()) {
      throw Error(ErrorKind::InvalidInput, "field '" + where + ".class': required string");
    }
    SweepClassConfig cc;
    cc.cls = parse_class(c["class"].get<std::string>());
    auto size_field = [&](const char* key, std::size_t& out) {
      if (!c.contains(key)) return;
      if (!c[key].is_number_unsigned()) {
        throw Error(ErrorKind::InvalidInput, "field '" + where + "." + key + "': expected an unsigned integer");
      }
      out = c[key].get<std::size_t>();
    };
    size_field("count", cc.count);
    size_field("n_min", cc.n_min);
    size_field("n_max", cc.n_max);
    if (c.contains("extended")) {
      if (!c["extended"].is_boolean()) throw Error(ErrorKind::InvalidInput, "field '" + where + ".extended': expected a boolean");
      cc.extended = c["extended"].get<bool>();
    }
    if (cc.n_min > cc.n_max) throw Error(ErrorKind::InvalidInput, "field '" + where + "': n_min > n_max");
    if (cc.cls == SweepClass::Weighted && !c.contains("n_max")) cc.n_max = 40;
    if (cc.cls == SweepClass::Control && !c.contains("n_max")) cc.n_max = 12;
    if (cc.cls == SweepClass::Weighted && cc.n_max < 34) {
      throw Error(ErrorKind::InvalidInput, "field '" + where + ".n_max': weighted instances need n_max >= 34");
    }
    cfg.classes.push_back(cc);
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot read sweep config " + path);
  try {
    return parse_sweep_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

SweepRow run_sweep_instance(SweepClass cls, std::uint64_t seed, std::size_t index, const SweepClassConfig& config,
                            std::size_t cesaro_n_max) {
  SweepRow row;
  row.cls = cls;
  row.index = index;
  Rng rng = instance_rng(seed, class_salt(cls) + index);
  try {
    switch (cls) {
      case SweepClass::Map:
        map_instance(row, rng, config, cesaro_n_max);
        break;
      case SweepClass::Weighted:
        weighted_instance(row, rng, config, cesaro_n_max);
        break;
      case SweepClass::Control:
        control_instance(row, rng, config, cesaro_n_max);
        break;
      case SweepClass::Permutation:
        permutation_instance(row, rng, config);
        break;
      case SweepClass::NonBijective:
        non_bijective_instance(row, rng, config);
        break;
    }
    row.outcome = Outcome::Pass;
    for (const auto& [name, ok] : row.invariants) {
      if (!ok) {
        row.outcome = Outcome::Fail;
        row.detail += (row.detail.empty() ? "failed: " : ", ") + name;
      }
    }
  } catch (const Error& e) {
    row.outcome = is_theorem_violation(e.kind()) ? Outcome::Fail : Outcome::Error;
    row.detail = e.what();
  }
  return row;
}

bool SweepResult::any_failure() const {
  return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.outcome == Outcome::Fail; });
}

bool SweepResult::any_error() const {
  return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.outcome == Outcome::Error; });
}

int SweepResult::exit_code() const { return any_failure() ? 2 : any_error() ? 1 : 0; }

std::size_t default_thread_count() {
  if (const char* env = std::getenv("UERGO_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

SweepResult run_sweep(const SweepConfig& config, std::size_t threads) {
  struct Job {
    std::size_t cls;
    std::size_t index;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < config.classes.size(); ++c) {
    for (std::size_t i = 0; i < config.classes[c].count; ++i) jobs.push_back({c, i});
  }
  SweepResult result;
  result.threads = threads == 0 ? default_thread_count() : threads;
  result.rows.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto& cc = config.classes[jobs[j].cls];
      result.rows[j] = run_sweep_instance(cc.cls, config.seed, jobs[j].index, cc, config.cesaro_n_max);
    }
  };
  const std::size_t n_threads = std::min(result.threads, std::max<std::size_t>(jobs.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.cls != b.cls ? a.cls < b.cls : a.index < b.index;
  });
  return result;
}

std::string rows_csv(const SweepResult& result, SweepClass cls) {
  std::ostringstream os;
  const SweepRow* header = nullptr;
  for (const auto& r : result.rows) {
    if (r.cls == cls && (!header || r.invariants.size() > header->invariants.size())) header = &r;
  }
  os << "index,n,outcome";
  if (header) {
    for (const auto& [k, v] : header->invariants) os << ',' << k;
    for (const auto& [k, v] : header->metrics) os << ',' << k;
  }
  os << ",detail\n";
  for (const auto& r : result.rows) {
    if (r.cls != cls) continue;
    os << r.index << ',' << r.n << ',' << to_string(r.outcome);
    for (const auto& [k, v] : header->invariants) os << ',' << (r.invariant(k) ? 1 : 0);
    for (const auto& [k, v] : header->metrics) os << ',' << cell(r.metric(k));
    os << ',' << csv_text(r.detail) << '\n';
  }
  return os.str();
}

std::string summary_csv(const SweepResult& result) {
  // Ordered by class, then first appearance of the invariant.
  std::vector<std::pair<std::pair<SweepClass, std::string>, std::pair<std::size_t, std::size_t>>> table;
  for (const auto& r : result.rows) {
    for (const auto& [k, v] : r.invariants) {
      auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first.first == r.cls && e.first.second == k; });
      if (it == table.end()) {
        table.push_back({{r.cls, k}, {0, 0}});
        it = std::prev(table.end());
      }
      (v ? it->second.first : it->second.second) += 1;
    }
  }
  std::stable_sort(table.begin(), table.end(), [](const auto& a, const auto& b) { return a.first.first < b.first.first; });
  std::ostringstream os;
  os << "class,invariant,passed,failed\n";
  for (const auto& [key, counts] : table) {
    os << to_string(key.first) << ',' << key.second << ',' << counts.first << ',' << counts.second << '\n';
  }
  return os.str();
}

}  // namespace uergo
