// uergo: analyze instance files, run seeded property sweeps, reproduce the
// example gallery. Exit codes: 0 consistent, 1 invalid input, 2 theorem
// violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "uergo/error.hpp"
#include "uergo/pipeline.hpp"
#include "uergo/sweep.hpp"

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw uergo::Error(uergo::ErrorKind::InvalidInput, "cannot write " + path);
  out << text;
}

int emit(const uergo::RunResult& run, const std::string& json_out, const std::string& csv_out) {
  const std::string text = run.report.dump(2) + "\n";
  if (json_out.empty()) {
    std::cout << text;
  } else {
    write_file(json_out, text);
  }
  if (!csv_out.empty()) write_file(csv_out, run.decay_csv);
  if (run.exit_code != uergo::kExitConsistent && run.report.contains("error")) {
    std::cerr << "uergo: " << run.report["error"]["message"].get<std::string>() << "\n";
  }
  return run.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uniform ergodicity of finite lattice homomorphisms"};
  app.require_subcommand(1);

  std::string path;
  std::string json_out;
  std::string csv_out;
  bool normalize = false;
  double delta = 1e-4;
  auto* analyze = app.add_subcommand("analyze", "Full pipeline on an instance file");
  analyze->add_option("file", path, "Instance JSON")->required();
  analyze->add_option("--json-out", json_out, "Write the report here instead of stdout");
  analyze->add_option("--csv-out", csv_out, "Write the decay CSV here");
  analyze->add_flag("--normalize", normalize, "Rescale T by 1/r(T)");
  analyze->add_option("--delta", delta, "Isolation threshold for the spectral gap at 1")->check(CLI::PositiveNumber);

  std::string config_path;
  std::string out_dir = ".";
  std::size_t threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Seeded property sweep");
  sweep->add_option("config", config_path, "Sweep config JSON")->required();
  sweep->add_option("--out-dir", out_dir, "Directory for <class>.csv and summary.csv");
  sweep->add_option("--threads", threads, "Worker threads (default: UERGO_THREADS or hardware)");

  std::string name;
  std::size_t truncation = 8;
  auto* gallery = app.add_subcommand("gallery", "Built-in example instances");
  gallery->add_option("name", name, "am_diag_half_one | l1_constant_map | c_limit_truncation | l1_doubling_truncation")
      ->required();
  gallery->add_option("--n", truncation, "Truncation size");
  gallery->add_option("--json-out", json_out, "Write the report here instead of stdout");
  gallery->add_option("--csv-out", csv_out, "Write the decay CSV here");

  auto* oracle = app.add_subcommand("oracle", "Cycle analysis of a map or weighted instance");
  oracle->add_option("file", path, "Instance JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : uergo::kExitInvalid;
  }

  try {
    if (*analyze) {
      auto spec = uergo::load_instance(path);
      spec.normalize = spec.normalize || normalize;
      uergo::AnalyzeOptions options;
      options.equivalence.isolation_delta = delta;
      uergo::RunResult run;
      try {
        run = uergo::analyze(uergo::build_instance(spec), options);
      } catch (const uergo::Error& e) {
        // build_instance rejects inputs before the pipeline starts.
        std::cerr << "uergo: " << e.what() << "\n";
        return uergo::exit_code_for(e);
      }
      return emit(run, json_out, csv_out);
    }
    if (*gallery) return emit(uergo::analyze_gallery(name, truncation), json_out, csv_out);
    if (*oracle) {
      const auto spec = uergo::load_instance(path);
      std::cout << uergo::oracle_report(uergo::build_instance(spec)).dump(2) << "\n";
      return uergo::kExitConsistent;
    }
    if (*sweep) {
      const auto config = uergo::load_sweep_config(config_path);
      const auto result = uergo::run_sweep(config, threads);
      std::filesystem::create_directories(out_dir);
      for (const auto& cc : config.classes) {
        write_file((std::filesystem::path(out_dir) / (std::string(uergo::to_string(cc.cls)) + ".csv")).string(),
                   uergo::rows_csv(result, cc.cls));
      }
      const std::string summary = uergo::summary_csv(result);
      write_file((std::filesystem::path(out_dir) / "summary.csv").string(), summary);
      std::cout << summary;
      return result.exit_code();
    }
  } catch (const uergo::Error& e) {
    std::cerr << "uergo: " << e.what() << "\n";
    return uergo::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "uergo: " << e.what() << "\n";
    return uergo::kExitInvalid;
  }
  return uergo::kExitInvalid;
}
