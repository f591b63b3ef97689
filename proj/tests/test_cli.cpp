#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uergo/error.hpp"
#include "uergo/generators.hpp"
#include "uergo/instance.hpp"
#include "uergo/latops.hpp"
#include "uergo/pipeline.hpp"
#include "uergo/sweep.hpp"

namespace uergo {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Scratch directory unique to the test, removed afterwards.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("uergo_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& contents = "") const {
    const auto p = path_ / name;
    if (!contents.empty()) std::ofstream(p) << contents;
    return p;
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct Run {
  int code = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(UERGO_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind parse_error_kind(const std::string& text) {
  try {
    parse_instance_text(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted: " << text;
  return ErrorKind::TheoremViolation;
}

TEST(Instance, ParsesMapWeightedAndMatrix) {
  const auto m = parse_instance_text(R"({"kind": "map", "n": 3, "phi": [1, 2, 0], "name": "c3"})");
  EXPECT_EQ(m.kind, InstanceKind::Map);
  EXPECT_EQ(m.phi, (std::vector<State>{1, 2, 0}));

  const auto w = parse_instance_text(R"({"kind": "weighted", "n": 2, "phi": [1, 0], "weights": ["2", "1/2"]})");
  EXPECT_EQ(w.weights, (std::vector<double>{2.0, 0.5}));

  const auto x = parse_instance_text(R"({"kind": "matrix", "n": 2, "matrix": [[1, 0], [[0.5, 0], 0]]})");
  ASSERT_TRUE(x.matrix.has_value());
  EXPECT_EQ((*x.matrix)(1, 0), Complex(0.5, 0.0));
}

TEST(Instance, RejectsMalformedInput) {
  EXPECT_EQ(parse_error_kind(R"({"kind": "map", "n": 0, "phi": []})"), ErrorKind::InvalidInput);
  EXPECT_EQ(parse_error_kind(R"({"kind": "map", "n": 2, "phi": [0, 2]})"), ErrorKind::InvalidInput);
  EXPECT_EQ(parse_error_kind(R"({"kind": "map", "n": 2, "phi": [0, 1], "extra": 1})"), ErrorKind::InvalidInput);
  EXPECT_EQ(parse_error_kind(R"({"kind": "blob", "n": 1})"), ErrorKind::InvalidInput);
  EXPECT_EQ(parse_error_kind(R"({"kind": "map", "n": 2, "phi": [0, 1], "measure": [1, 0]})"),
            ErrorKind::InvalidInput);
  EXPECT_EQ(parse_error_kind("{\"kind\": \"map\",\n \"n\": }"), ErrorKind::InvalidInput);
  try {
    parse_instance_text("{\"kind\": \"map\",\n \"n\": }");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Instance, RoundTripAndDigest) {
  Rng rng = instance_rng(401, 0);
  const auto spec = weighted_spec(gapped_weighted(rng, 40).op, "l1");
  const auto again = parse_instance(to_json(spec));
  EXPECT_EQ(instance_digest(spec), instance_digest(again));
  EXPECT_EQ(instance_digest(spec).size(), 16u);
  EXPECT_NE(instance_digest(spec), instance_digest(map_spec(FiniteMap::rotation(3))));
}

TEST(Instance, NormalizeRescalesBySpectralRadius) {
  auto spec = weighted_spec(weighted_composition(FiniteMap::rotation(2), {4.0, 1.0}));
  spec.normalize = true;
  const auto inst = build_instance(spec);
  EXPECT_NEAR(inst.scale, 0.5, 1e-12);
  EXPECT_NEAR(eigen(inst.op).spectral_radius, 1.0, 1e-12);
}

TEST(Pipeline, ExitCodeContract) {
  EXPECT_EQ(exit_code_for(Error(ErrorKind::InvalidInput, "x")), kExitInvalid);
  EXPECT_EQ(exit_code_for(Error(ErrorKind::NotALatticeHomomorphism, "x")), kExitInvalid);
  EXPECT_EQ(exit_code_for(Error(ErrorKind::InvalidHypothesis, "x")), kExitInvalid);
  EXPECT_EQ(exit_code_for(Error(ErrorKind::TheoremViolation, "x")), kExitViolation);
  EXPECT_EQ(exit_code_for(Error(ErrorKind::SemisimplicityViolation, "x")), kExitViolation);
  EXPECT_EQ(exit_code_for(Error(ErrorKind::NonDirectSum, "x")), kExitViolation);

  EXPECT_EQ(analyze(build_instance(map_spec(FiniteMap::rotation(3)))).exit_code, kExitConsistent);
  EXPECT_EQ(analyze(build_instance(matrix_spec(jordan_block(2)))).exit_code, kExitInvalid);
  const auto not_normalized = build_instance(matrix_spec(ComplexMatrix::diagonal(std::vector<double>{0.5, 2.0})));
  EXPECT_EQ(analyze(not_normalized).exit_code, kExitInvalid);
}

TEST(Pipeline, DecayCsvShape) {
  const auto r = analyze(build_instance(map_spec(FiniteMap({1, 2, 3, 2}))));
  std::istringstream in(r.decay_csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,cesaro_deviation,power_deviation,tn_minus_sn");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
    ++rows;
  }
  EXPECT_GT(rows, 0u);
  EXPECT_EQ(r.report["status"], "consistent");
  EXPECT_EQ(r.report["decomposition"]["period"], 2);
}

TEST(Pipeline, GalleryExpectationsHold) {
  for (auto name : gallery_names()) {
    const auto r = analyze_gallery(name, 8);
    EXPECT_EQ(r.exit_code, kExitConsistent) << name << ": " << r.report.dump();
  }
}

TEST(Pipeline, TruncationStudy) {
  const std::size_t sizes[] = {4, 8, 16};
  const auto rows = truncation_study(sizes);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) {
    ASSERT_TRUE(row.nilpotency_index.has_value());
    EXPECT_EQ(*row.nilpotency_index, row.n);
    EXPECT_NEAR(row.restricted_norm, 0.5, 1e-10);
    EXPECT_LE(row.idempotency_residual, 1e-8);
  }
}

TEST(Sweep, ConfigValidation) {
  const auto cfg = parse_sweep_config(json::parse(R"({"seed": 7, "classes": [{"class": "map", "count": 3}]})"));
  EXPECT_EQ(cfg.seed, 7u);
  ASSERT_EQ(cfg.classes.size(), 1u);
  EXPECT_EQ(cfg.classes[0].n_max, 50u);
  EXPECT_THROW(parse_sweep_config(json::parse(R"({"classes": [{"class": "bogus", "count": 1}]})")), Error);
  EXPECT_THROW(parse_sweep_config(json::parse(R"({"classes": [{"class": "map", "count": 1, "n_min": 9, "n_max": 3}]})")),
               Error);
}

// Rows depend only on (seed, class, index): one thread and three threads
// render identical CSVs.
TEST(Sweep, DeterministicAcrossThreadCounts) {
  SweepConfig cfg;
  cfg.seed = 1234;
  cfg.cesaro_n_max = 512;
  cfg.classes = {{SweepClass::Map, 12, 1, 30, true},
                 {SweepClass::Weighted, 8, 1, 40, true},
                 {SweepClass::Control, 8, 1, 12, true},
                 {SweepClass::Permutation, 6, 1, 30, true},
                 {SweepClass::NonBijective, 6, 2, 30, false}};
  const auto serial = run_sweep(cfg, 1);
  const auto parallel = run_sweep(cfg, 3);
  EXPECT_EQ(serial.exit_code(), 0);
  EXPECT_EQ(summary_csv(serial), summary_csv(parallel));
  for (const auto& c : cfg.classes) EXPECT_EQ(rows_csv(serial, c.cls), rows_csv(parallel, c.cls));
  for (const auto& row : serial.rows) EXPECT_EQ(row.outcome, Outcome::Pass) << row.detail;
}

TEST(Cli, AnalyzeThreeCycle) {
  TempDir dir;
  const auto in = dir.file("c3.json", R"({"kind": "map", "n": 3, "phi": [1, 2, 0]})");
  const auto out = dir.file("c3_report.json");
  const auto csv = dir.file("c3.csv");
  const auto r = run_cli("analyze " + in.string() + " --json-out " + out.string() + " --csv-out " + csv.string());
  EXPECT_EQ(r.code, 0);
  const auto report = json::parse(slurp(out));
  EXPECT_EQ(report["status"], "consistent");
  EXPECT_EQ(report["oracle"]["topological"]["period"], 3);
  EXPECT_EQ(report["oracle"]["topological"]["spectral_period"], 3);
  EXPECT_EQ(slurp(csv).rfind("n,cesaro_deviation,power_deviation,tn_minus_sn", 0), 0u);
}

TEST(Cli, GalleryNames) {
  for (auto name : gallery_names()) {
    const auto r = run_cli("gallery " + std::string(name) + " --n 8");
    EXPECT_EQ(r.code, 0) << name;
    json report;
    EXPECT_NO_THROW(report = json::parse(r.out)) << name;
  }
  EXPECT_EQ(run_cli("gallery no_such_instance").code, 1);
}

TEST(Cli, InvalidInputsExitOne) {
  TempDir dir;
  EXPECT_EQ(run_cli("analyze " + dir.file("bad.json", "{ not json").string()).code, 1);
  EXPECT_EQ(run_cli("analyze " + (dir.path() / "missing.json").string()).code, 1);
  const auto control = dir.file("j2.json", R"({"kind": "matrix", "n": 2, "matrix": [[1, 1], [0, 1]]})");
  const auto r = run_cli("analyze " + control.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("not-a-lattice-homomorphism"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli("frobnicate").code, 1);
  EXPECT_EQ(run_cli("--help").code, 0);
}

TEST(Cli, NormalizeFlag) {
  TempDir dir;
  const auto in = dir.file("w.json", R"({"kind": "weighted", "n": 2, "phi": [1, 0], "weights": [4, 1]})");
  EXPECT_EQ(run_cli("analyze " + in.string()).code, 1);
  EXPECT_EQ(run_cli("analyze " + in.string() + " --normalize").code, 0);
}

TEST(Cli, OracleAndSweep) {
  TempDir dir;
  const auto in = dir.file("tail.json", R"({"kind": "map", "n": 4, "phi": [1, 2, 3, 2]})");
  const auto oracle = run_cli("oracle " + in.string());
  EXPECT_EQ(oracle.code, 0);
  const auto o = json::parse(oracle.out);
  EXPECT_EQ(o["preperiod"], 2);
  EXPECT_EQ(o["period"], 2);

  const auto cfg = dir.file("sweep.json", R"({"seed": 5, "cesaro_n_max": 512,
    "classes": [{"class": "map", "count": 4, "n_max": 20}, {"class": "control", "count": 4}]})");
  const auto out = dir.path() / "out";
  const auto r = run_cli("sweep " + cfg.string() + " --out-dir " + out.string() + " --threads 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(out / "map.csv"));
  EXPECT_TRUE(fs::exists(out / "control.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
}

}  // namespace
}  // namespace uergo
