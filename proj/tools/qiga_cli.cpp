#include <algorithm>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "qiga/experiment.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Quantum-inspired genetic algorithm benchmark runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run every (algorithm, test case, seed) of a spec, or replay a manifest");
  std::string spec_path;
  std::string seeds;
  std::string out;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  run->add_option("spec", spec_path, "Experiment spec (key = value) or a run's manifest.json")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Seed list overriding the spec, e.g. 1..5 or 1,3,9");
  run->add_option("--out", out, "Output root (default: spec 'out', then $QIGA_OUT_DIR, then ./runs)");
  run->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* oracle = app.add_subcommand("oracle", "Compute and cache the knapsack DP optimum / centroid baseline");
  std::string oracle_spec;
  std::string oracle_out;
  oracle->add_option("spec", oracle_spec, "Experiment spec")->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", oracle_out, "Cache directory (default: the spec's output root)");

  auto* report = app.add_subcommand("report", "Aggregate run directories into table6/7/8 CSVs");
  std::string report_root;
  std::string report_out;
  report->add_option("root", report_root, "Directory holding run directories")->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "Destination directory (default: root)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (fs::path(spec_path).extension() == ".json") {
        const fs::path root = out.empty() ? qiga::default_output_root() : fs::path(out);
        std::cout << qiga::rerun_manifest(spec_path, root).string() << "\n";
        return 0;
      }
      auto spec = qiga::ExperimentSpec::from_file(spec_path);
      if (!seeds.empty()) spec.seeds = qiga::parse_seed_list(seeds);
      if (!out.empty()) spec.out_dir = out;
      const auto summary = qiga::run_experiment(spec, workers);
      for (const auto& d : summary.run_dirs) std::cout << d.string() << "\n";
    } else if (*oracle) {
      const auto spec = qiga::ExperimentSpec::from_file(oracle_spec);
      const fs::path dir = !oracle_out.empty()       ? fs::path(oracle_out)
                           : !spec.out_dir.empty() ? spec.out_dir
                                                   : qiga::default_output_root();
      const auto values = qiga::compute_oracle(spec.problem);
      qiga::store_oracle(dir, spec.problem, values);
      std::cout << spec.problem.id() << ":";
      if (values.knapsack_optimum) std::cout << " knapsack_optimum=" << *values.knapsack_optimum;
      if (values.centroid_accuracy) std::cout << " centroid_accuracy=" << std::fixed << std::setprecision(6) << *values.centroid_accuracy;
      std::cout << "\n";
    } else if (*report) {
      const fs::path root = report_root.empty() ? qiga::default_output_root() : fs::path(report_root);
      const fs::path dest = report_out.empty() ? root : fs::path(report_out);
      qiga::write_report(root, dest);
      std::cout << (dest / "table6.csv").string() << "\n"
                << (dest / "table7.csv").string() << "\n"
                << (dest / "table8.csv").string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
