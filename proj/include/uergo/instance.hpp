#pragma once

// Instance files: a JSON description of a finite operator problem.
//
//   {"kind": "map" | "weighted" | "matrix", "n": 4,
//    "phi": [1, 2, 3, 0], "weights": [1, 0.5, 2, 1],
//    "matrix": [[0, 1], [[0.5, 0], 0]],
//    "measure": [1, 1, 2, 2], "norm": "sup" | "l1" | "l2", "normalize": false}
//
// Numbers may be given as JSON numbers or as exact "p/q" strings; matrix
// entries may also be [re, im] pairs.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uergo/dynsys.hpp"
#include "uergo/latops.hpp"
#include "uergo/specmat.hpp"

namespace uergo {

enum class InstanceKind { Map, Weighted, Matrix };
const char* to_string(InstanceKind kind);

struct InstanceSpec {
  InstanceKind kind = InstanceKind::Map;
  std::size_t n = 0;
  std::vector<State> phi;
  std::vector<double> weights;
  std::optional<CDense> matrix;
  std::optional<std::vector<double>> measure;
  std::string norm = "sup";
  bool normalize = false;
};

/// Validates the schema. Throws InvalidInput naming the offending field.
InstanceSpec parse_instance(const nlohmann::json& doc);
/// Parses text; syntax errors report line and column.
InstanceSpec parse_instance_text(std::string_view text);
InstanceSpec load_instance(const std::string& path);

nlohmann::json to_json(const InstanceSpec& spec);

/// FNV-1a (64 bit) of the canonical JSON serialization, as 16 hex digits.
std::string instance_digest(const InstanceSpec& spec);

struct Instance {
  InstanceSpec spec;
  ComplexMatrix op;
  NormKind norm;
  std::optional<FiniteMap> map;
  std::optional<WeightedCompositionOperator> weighted;
  std::optional<FiniteMeasure> measure;
  /// Factor applied to the input operator (1/r(T) under normalize).
  double scale = 1.0;
};

/// Builds the operator. The L1/L2 norms use the instance measure, or the
/// counting measure when none is given.
Instance build_instance(const InstanceSpec& spec);

/// Spec for a map / weighted composition / dense matrix.
InstanceSpec map_spec(const FiniteMap& map, std::string norm = "sup");
InstanceSpec weighted_spec(const WeightedCompositionOperator& op, std::string norm = "sup");
InstanceSpec matrix_spec(const ComplexMatrix& op, std::string norm = "sup");

}  // namespace uergo
