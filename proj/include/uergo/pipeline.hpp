#pragma once

// End-to-end analysis of one instance: lattice gate, spectrum, isolation,
// decomposition, ergodicity verdicts, decay curves and oracle comparisons,
// rendered as a JSON report plus a decay CSV.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uergo/ergodic.hpp"
#include "uergo/error.hpp"
#include "uergo/instance.hpp"

namespace uergo {

/// Process exit codes of the analysis commands.
enum ExitCode : int { kExitConsistent = 0, kExitInvalid = 1, kExitViolation = 2 };

int exit_code_for(const Error& e);

struct AnalyzeOptions {
  EquivalenceOptions equivalence;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  nlohmann::json report;
  /// Columns n, cesaro_deviation, power_deviation, tn_minus_sn (SUP norm);
  /// empty cells where a curve was not computed.
  std::string decay_csv;
  int exit_code = kExitConsistent;
};

/// Never throws for library errors: they are recorded in the report
/// ("status", "error") and mapped to the exit code.
RunResult analyze(const Instance& instance, const AnalyzeOptions& options = {});

/// Cycle analysis only (no linear algebra): preperiod, period, cycles,
/// bijectivity and, when a measure is present, measure preservation.
nlohmann::json oracle_report(const Instance& instance);

/// Runs analyze on a gallery instance and asserts its recorded expectations;
/// a failed expectation is a theorem violation. Truncation families add a
/// sweep over n in {4, 8, 16, 32, 64}.
RunResult analyze_gallery(std::string_view name, std::size_t n = 8);

struct TruncationRow {
  std::size_t n = 0;
  std::optional<std::size_t> nilpotency_index;
  /// ||T restricted to the tail ideal|| in L1(mu).
  double restricted_norm = 0.0;
  double idempotency_residual = 0.0;
  double commutation_residual = 0.0;
};

std::vector<TruncationRow> truncation_study(std::span<const std::size_t> sizes);

/// Expected distinct spectrum vs computed eigenvalues: every computed value
/// lies near an expected one and vice versa. The tolerance around an expected
/// value hit by m computed eigenvalues is max(1e-8, (4 beta)^(1/m)), beta the
/// Schur backward error: a defective eigenvalue of multiplicity m moves by
/// up to beta^(1/m).
struct SpectrumMatch {
  bool matches = false;
  double worst_distance = 0.0;
  double worst_tolerance = 0.0;
};
SpectrumMatch match_spectrum(const SpectrumReport& report, std::span<const Complex> expected);

}  // namespace uergo
