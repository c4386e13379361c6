#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qiga/engine.hpp"
#include "qiga/fitness.hpp"

namespace qiga {

enum class ProblemKind : std::uint8_t { OneMax, Knapsack, FeatureSelection };

std::string to_string(ProblemKind k);
ProblemKind problem_kind_from_string(const std::string& name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::OneMax;
  std::size_t length = 32;           // onemax
  std::size_t knapsack_items = 20;
  std::uint64_t knapsack_seed = 1;
  std::filesystem::path images;      // feature-selection; empty: synthetic
  std::filesystem::path labels;
  std::size_t train_samples = 1000;
  std::size_t fitness_samples = 500;
  std::uint64_t dataset_seed = 7;    // synthetic dataset only

  /// Stable identifier, also the oracle cache key.
  std::string id() const;
  void validate() const;
};

/// Optional overrides on top of a test case's defaults.
struct EngineOverrides {
  std::optional<std::size_t> population_size;
  std::optional<std::size_t> epochs;
  std::optional<double> boost_c;
  std::optional<double> mean_threshold;
  std::optional<double> param_threshold;
  std::optional<double> env_epsilon;
  std::optional<double> elitism_fraction;
  std::optional<std::size_t> level_min;
  std::optional<std::size_t> level_max;
  std::optional<std::size_t> level_interval;
  std::optional<InitMode> init_mode;
  std::optional<std::size_t> total_epochs;
};

/// Flat key = value experiment description; '#' starts a comment.
///
///   algorithms      ga,qiga,dqiga
///   test_cases      1,2,3
///   seeds           1..5 or 1,2,7
///   problem         onemax | knapsack | feature-selection
///   length          onemax length
///   knapsack_items, knapsack_seed
///   images, labels  IDX paths (feature-selection); dataset = synthetic otherwise
///   train_samples, fitness_samples, dataset_seed
///   out             output root
///   population_size, epochs, boost_c, mean_threshold, param_threshold,
///   env_epsilon, elitism_fraction, level_min, level_max, level_interval,
///   init_mode, total_epochs
struct ExperimentSpec {
  std::vector<Algorithm> algorithms;
  std::vector<TestCase> test_cases;
  ProblemSpec problem;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
  EngineOverrides overrides;

  static ExperimentSpec parse(const std::string& text);
  static ExperimentSpec from_file(const std::filesystem::path& path);
  void validate() const;
};

/// "1..5" or "1,2,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// One fully resolved run; serializes to manifest.json.
struct RunSpec {
  Algorithm algorithm = Algorithm::QIGA;
  TestCase test_case = TestCase::T1;
  std::uint64_t seed = 1;
  ProblemSpec problem;
  EngineConfig engine;

  std::string directory_name() const;
  std::string to_json() const;
  static RunSpec from_json(const std::string& text);
};

/// Resolves the engine configuration of one run: test-case defaults, then
/// overrides, then seed and batch size for the problem.
EngineConfig resolve_engine(TestCase tc, std::uint64_t seed, const EngineOverrides& overrides,
                            const Problem& problem);

/// Cached reference values of a problem.
struct OracleValues {
  std::optional<std::int64_t> knapsack_optimum;
  std::optional<double> centroid_accuracy;
};

OracleValues compute_oracle(const ProblemSpec& spec);
/// Reads <dir>/oracle.json; entries are keyed by ProblemSpec::id().
std::map<std::string, OracleValues> load_oracle_cache(const std::filesystem::path& dir);
void store_oracle(const std::filesystem::path& dir, const ProblemSpec& spec, const OracleValues& values);

/// Builds the fitness problem; knapsack errors are normalized by the DP
/// optimum, taken from the cache when present.
std::unique_ptr<Problem> build_problem(const ProblemSpec& spec, const std::map<std::string, OracleValues>& cache = {});

struct TimingStats {
  double optimal = 0.0;
  double worst = 0.0;
  double average = 0.0;
};

/// (min, max, mean) of a non-empty list.
TimingStats timing_stats(std::span<const double> durations);

/// Writes generations.csv, summary.json, timing.csv and manifest.json.
void write_run_outputs(const std::filesystem::path& dir, const RunSpec& spec, const RunResult& result);

/// Executes one run into <out>/<directory_name()>.
RunResult execute_run(const RunSpec& spec, const Problem& problem, const std::filesystem::path& out);

struct ExperimentSummary {
  std::vector<std::filesystem::path> run_dirs;
};

/// Every (algorithm, test case, seed) combination, up to `workers` at once.
ExperimentSummary run_experiment(const ExperimentSpec& spec, std::size_t workers = 1);

/// Re-executes the run described by a manifest into out.
std::filesystem::path rerun_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out);

/// Default output root: $QIGA_OUT_DIR, else "runs".
std::filesystem::path default_output_root();

inline constexpr const char* kGenerationsHeader = "generation,best_fit,avg_fit";
inline constexpr const char* kTimingHeader = "phase,optimal,worst,average";
inline constexpr const char* kTable6Header = "problem,algorithm,test_case,best_fit,avg_fit";
inline constexpr const char* kTable7Header = "problem,algorithm,test_case,accuracy,loss";
inline constexpr const char* kTable8Header = "problem,algorithm,test_case,phase,optimal,worst,average";

/// Aggregates every run directory below root into table6.csv, table7.csv and
/// table8.csv in out (seed means; timing extremes over all runs).
void write_report(const std::filesystem::path& root, const std::filesystem::path& out);

}  // namespace qiga
