#include "uergo/instance.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uergo/error.hpp"

namespace uergo {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::InvalidInput, "field '" + field + "': " + msg);
}

// A JSON number or an exact "p/q" (or "p") string.
double parse_real(const json& v, const std::string& field) {
  if (v.is_number()) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "not finite");
    return x;
  }
  if (!v.is_string()) fail(field, "expected a number or a \"p/q\" string, got " + std::string(v.type_name()));
  const auto s = v.get<std::string>();
  const auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double x = std::stod(s, &used);
      if (used != s.size()) fail(field, "trailing characters in \"" + s + "\"");
      return x;
    }
    const std::string num = s.substr(0, slash);
    const std::string den = s.substr(slash + 1);
    const double p = std::stod(num, &used);
    if (used != num.size()) fail(field, "bad numerator in \"" + s + "\"");
    const double q = std::stod(den, &used);
    if (used != den.size()) fail(field, "bad denominator in \"" + s + "\"");
    if (q == 0.0) fail(field, "zero denominator in \"" + s + "\"");
    return p / q;
  } catch (const std::logic_error&) {
    fail(field, "cannot parse \"" + s + "\" as a number");
  }
}

Complex parse_complex(const json& v, const std::string& field) {
  if (v.is_array()) {
    if (v.size() != 2) fail(field, "complex entries are [re, im]");
    return {parse_real(v[0], field + "[0]"), parse_real(v[1], field + "[1]")};
  }
  return parse_real(v, field);
}

std::vector<double> parse_reals(const json& doc, const std::string& key, std::size_t n) {
  const json& arr = doc.at(key);
  if (!arr.is_array()) fail(key, "expected an array");
  if (arr.size() != n) fail(key, "has " + std::to_string(arr.size()) + " entries, expected n = " + std::to_string(n));
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(parse_real(arr[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

json number_json(double x) { return x; }

}  // namespace

const char* to_string(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::Map:
      return "map";
    case InstanceKind::Weighted:
      return "weighted";
    case InstanceKind::Matrix:
      return "matrix";
  }
  return "map";
}

InstanceSpec parse_instance(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::InvalidInput, "instance must be a JSON object");
  static const char* const known[] = {"kind", "n", "phi", "weights", "matrix", "measure", "norm", "normalize", "name"};
  for (const auto& [key, value] : doc.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(key, "unknown field");
  }

  InstanceSpec spec;
  if (!doc.contains("kind") || !doc["kind"].is_string()) fail("kind", "required string (map | weighted | matrix)");
  const auto kind = doc["kind"].get<std::string>();
  if (kind == "map") {
    spec.kind = InstanceKind::Map;
  } else if (kind == "weighted") {
    spec.kind = InstanceKind::Weighted;
  } else if (kind == "matrix") {
    spec.kind = InstanceKind::Matrix;
  } else {
    fail("kind", "unknown kind \"" + kind + "\"");
  }

  if (!doc.contains("n") || !doc["n"].is_number_integer() || doc["n"].get<long long>() < 1) {
    fail("n", "required positive integer");
  }
  spec.n = doc["n"].get<std::size_t>();

  if (spec.kind != InstanceKind::Matrix) {
    if (!doc.contains("phi") || !doc["phi"].is_array()) fail("phi", "required array for kind " + kind);
    const json& phi = doc["phi"];
    if (phi.size() != spec.n) {
      fail("phi", "has " + std::to_string(phi.size()) + " entries, expected n = " + std::to_string(spec.n));
    }
    for (std::size_t i = 0; i < spec.n; ++i) {
      const json& v = phi[i];
      if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<unsigned long long>() >= spec.n) {
        fail("phi[" + std::to_string(i) + "]", "expected an integer in [0, " + std::to_string(spec.n) + ")");
      }
      spec.phi.push_back(v.get<State>());
    }
    if (doc.contains("matrix")) fail("matrix", "only allowed for kind matrix");
  }
  if (spec.kind == InstanceKind::Weighted) {
    if (!doc.contains("weights")) fail("weights", "required for kind weighted");
    spec.weights = parse_reals(doc, "weights", spec.n);
  } else if (doc.contains("weights")) {
    fail("weights", "only allowed for kind weighted");
  }
  if (spec.kind == InstanceKind::Matrix) {
    if (!doc.contains("matrix") || !doc["matrix"].is_array()) fail("matrix", "required array of rows for kind matrix");
    if (doc.contains("phi")) fail("phi", "not allowed for kind matrix");
    const json& rows = doc["matrix"];
    if (rows.size() != spec.n) {
      fail("matrix", "has " + std::to_string(rows.size()) + " rows, expected n = " + std::to_string(spec.n));
    }
    const auto k = static_cast<Eigen::Index>(spec.n);
    CDense m(k, k);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::string row_field = "matrix[" + std::to_string(i) + "]";
      if (!rows[i].is_array() || rows[i].size() != spec.n) fail(row_field, "expected a row of n entries");
      for (std::size_t j = 0; j < spec.n; ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            parse_complex(rows[i][j], row_field + "[" + std::to_string(j) + "]");
      }
    }
    spec.matrix = std::move(m);
  }

  if (doc.contains("measure")) {
    auto mu = parse_reals(doc, "measure", spec.n);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (!(mu[i] > 0.0)) fail("measure[" + std::to_string(i) + "]", "must be strictly positive");
    }
    spec.measure = std::move(mu);
  }
  if (doc.contains("norm")) {
    if (!doc["norm"].is_string()) fail("norm", "expected sup | l1 | l2");
    spec.norm = doc["norm"].get<std::string>();
    if (spec.norm != "sup" && spec.norm != "l1" && spec.norm != "l2") fail("norm", "expected sup | l1 | l2");
  }
  if (doc.contains("normalize")) {
    if (!doc["normalize"].is_boolean()) fail("normalize", "expected a boolean");
    spec.normalize = doc["normalize"].get<bool>();
  }
  return spec;
}

InstanceSpec parse_instance_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line/column.
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::InvalidInput,
                "JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  return parse_instance(doc);
}

InstanceSpec load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot read instance file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_instance_text(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + std::string(e.what()));
  }
}

json to_json(const InstanceSpec& spec) {
  json doc;
  doc["kind"] = to_string(spec.kind);
  doc["n"] = spec.n;
  if (spec.kind != InstanceKind::Matrix) doc["phi"] = spec.phi;
  if (spec.kind == InstanceKind::Weighted) {
    doc["weights"] = json::array();
    for (double w : spec.weights) doc["weights"].push_back(number_json(w));
  }
  if (spec.matrix) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < spec.matrix->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < spec.matrix->cols(); ++j) {
        const Complex z = (*spec.matrix)(i, j);
        if (z.imag() == 0.0) {
          row.push_back(z.real());
        } else {
          row.push_back(json::array({z.real(), z.imag()}));
        }
      }
      rows.push_back(std::move(row));
    }
    doc["matrix"] = std::move(rows);
  }
  if (spec.measure) doc["measure"] = *spec.measure;
  doc["norm"] = spec.norm;
  doc["normalize"] = spec.normalize;
  return doc;
}

std::string instance_digest(const InstanceSpec& spec) {
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  const std::string canonical = to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Instance build_instance(const InstanceSpec& spec) {
  std::optional<FiniteMeasure> measure;
  if (spec.measure) measure.emplace(*spec.measure);
  const FiniteMeasure norm_measure = measure ? *measure : FiniteMeasure::counting(spec.n);
  NormKind norm = spec.norm == "l1"   ? NormKind::l1(norm_measure)
                  : spec.norm == "l2" ? NormKind::l2(norm_measure)
                                      : NormKind::sup();

  std::optional<FiniteMap> map;
  std::optional<WeightedCompositionOperator> weighted;
  CDense entries;
  switch (spec.kind) {
    case InstanceKind::Map:
      map.emplace(spec.phi);
      weighted.emplace(koopman_matrix(*map));
      entries = weighted->matrix().dense();
      break;
    case InstanceKind::Weighted:
      map.emplace(spec.phi);
      weighted.emplace(weighted_composition(*map, spec.weights));
      entries = weighted->matrix().dense();
      break;
    case InstanceKind::Matrix:
      entries = *spec.matrix;
      break;
  }

  double scale = 1.0;
  if (spec.normalize) {
    const double r = eigen(ComplexMatrix(entries), {.geometric = false}).spectral_radius;
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidInput, "normalize: spectral radius is 0 (nilpotent operator)");
    scale = 1.0 / r;
    entries *= scale;
    if (weighted) {
      std::vector<double> w(weighted->weights().begin(), weighted->weights().end());
      for (double& x : w) x *= scale;
      weighted.emplace(weighted_composition(*map, std::move(w)));
      entries = weighted->matrix().dense();
    }
  }
  return Instance{spec, ComplexMatrix(std::move(entries)), std::move(norm), std::move(map), std::move(weighted),
                  std::move(measure), scale};
}

InstanceSpec map_spec(const FiniteMap& map, std::string norm) {
  InstanceSpec spec;
  spec.kind = InstanceKind::Map;
  spec.n = map.size();
  spec.phi.assign(map.image().begin(), map.image().end());
  spec.norm = std::move(norm);
  return spec;
}

InstanceSpec weighted_spec(const WeightedCompositionOperator& op, std::string norm) {
  InstanceSpec spec = map_spec(op.map(), std::move(norm));
  spec.kind = InstanceKind::Weighted;
  spec.weights.assign(op.weights().begin(), op.weights().end());
  return spec;
}

InstanceSpec matrix_spec(const ComplexMatrix& op, std::string norm) {
  InstanceSpec spec;
  spec.kind = InstanceKind::Matrix;
  spec.n = op.size();
  spec.matrix = op.dense();
  spec.norm = std::move(norm);
  return spec;
}

}  // namespace uergo
