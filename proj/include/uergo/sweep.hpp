#pragma once

// Seeded property sweeps over instance classes. Instance i of a class draws
// from its own engine, so rows do not depend on thread count or scheduling;
// rows are sorted by (class, index) before rendering.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace uergo {

enum class SweepClass { Map, Weighted, Control, Permutation, NonBijective };
const char* to_string(SweepClass cls);

struct SweepClassConfig {
  SweepClass cls = SweepClass::Map;
  std::size_t count = 0;
  std::size_t n_min = 1;
  std::size_t n_max = 50;
  /// Adds the eigenprojection cross-check, approximant decay and Cesàro
  /// exponent to the core invariants of the class.
  bool extended = true;
};

struct SweepConfig {
  std::uint64_t seed = 42;
  std::vector<SweepClassConfig> classes;
  std::size_t cesaro_n_max = 512;  // >= 512: the exponent fit spans [64, 512]
};

/// {"seed": 42, "cesaro_n_max": 512, "classes": [{"class": "map", "count": 100,
///  "n_min": 1, "n_max": 50, "extended": true}, ...]}. Class names: map,
/// weighted, control, permutation, non_bijective. Throws InvalidInput.
SweepConfig parse_sweep_config(const nlohmann::json& doc);
SweepConfig load_sweep_config(const std::string& path);

enum class Outcome { Pass, Fail, Error };
const char* to_string(Outcome o);

struct SweepRow {
  SweepClass cls = SweepClass::Map;
  std::size_t index = 0;
  std::size_t n = 0;
  Outcome outcome = Outcome::Pass;
  /// Fixed order per class.
  std::vector<std::pair<std::string, bool>> invariants;
  std::vector<std::pair<std::string, double>> metrics;
  std::string detail;
  /// Wall time of the core invariants and of the extended ones (not rendered).
  double core_seconds = 0.0;
  double extended_seconds = 0.0;

  bool invariant(const std::string& name) const;
  double metric(const std::string& name) const;  // NaN when absent
};

/// One instance; never throws for library errors (recorded as Outcome::Error
/// or, for theorem violations, as a failed invariant).
SweepRow run_sweep_instance(SweepClass cls, std::uint64_t seed, std::size_t index, const SweepClassConfig& config,
                            std::size_t cesaro_n_max = 512);

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t threads = 1;

  bool any_failure() const;
  bool any_error() const;
  /// 2 when an invariant failed, 1 when an instance errored, 0 otherwise.
  int exit_code() const;
};

/// threads == 0 reads UERGO_THREADS, falling back to the hardware count.
SweepResult run_sweep(const SweepConfig& config, std::size_t threads = 0);

std::size_t default_thread_count();

/// One CSV per class: index, n, outcome, invariant flags, metrics, detail.
std::string rows_csv(const SweepResult& result, SweepClass cls);
/// class, invariant, passed, failed.
std::string summary_csv(const SweepResult& result);

}  // namespace uergo
