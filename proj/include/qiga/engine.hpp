#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qiga/fitness.hpp"
#include "qiga/operators.hpp"
#include "qiga/qubit.hpp"
#include "qiga/rotation.hpp"

namespace qiga {

enum class Algorithm : std::uint8_t { GA, QIGA, DQIGA };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

enum class InitMode : std::uint8_t { Uniform, RandomAngle, Blocks };

std::string to_string(InitMode m);
InitMode init_mode_from_string(const std::string& name);

struct LevelConfig {
  std::size_t min_length = 0;  // 0: derive from the problem length
  std::size_t max_length = 0;
  std::size_t interval = 0;

  /// Four levels ending at length when possible: interval = length / 4,
  /// min = length - 3 * interval. Short encodings fall back to (1, n, 1).
  static LevelConfig for_length(std::size_t length);
  bool unset() const { return min_length == 0 && max_length == 0 && interval == 0; }
};

/// Block-structured initialization. Each block is a contiguous segment of
/// segment_length genes; pooling blocks start biased towards |0>, plain
/// blocks in uniform superposition, genes outside every block near |0>.
struct BlockInitConfig {
  std::size_t n_min = 1;
  std::size_t n_max = 4;
  std::size_t d = 28;
  std::size_t segment_length = 4;
  std::size_t candidates = 3;

  std::size_t pooling_cap() const;
  void validate(std::size_t chromosome_length) const;
};

struct EngineConfig {
  std::size_t population_size = 50;
  std::size_t epochs = 100;
  double p_crossover = 0.2;
  /// Expected mutation events per individual. The per-gene rate is
  /// p_mutation / chromosome length.
  double p_mutation = 0.5;
  TestCase rotation_test_case = TestCase::T1;
  double theta_min = 0.001 * std::numbers::pi;
  double theta_max = 0.001 * std::numbers::pi;
  double boost_c = 0.95;
  SelectionConfig selection;
  LevelConfig level;
  InitMode init_mode = InitMode::Uniform;
  BlockInitConfig blocks;
  BatchConfig batches;
  /// Stop once the best score reaches this value (off by default).
  std::optional<double> target_score;
  std::uint64_t seed = 1;

  /// Standard parameters of a test case: population 50, 100 epochs and the
  /// case's crossover, mutation and rotation angle.
  static EngineConfig for_test_case(TestCase tc);
  void validate() const;
  RotationPolicy rotation_policy(std::size_t level_max) const;
};

struct LevelTrace {
  std::size_t level = 0;
  std::size_t length = 0;
  std::size_t generations = 0;
  double best_score_at_end = 0.0;
};

struct PhaseTimes {
  std::vector<double> rotation;
  std::vector<double> mutation;
  std::vector<double> crossover;
};

struct RunResult {
  Algorithm algorithm = Algorithm::GA;
  std::vector<double> best_score;  // best-so-far per generation
  std::vector<double> avg_score;   // population mean per generation
  Individual best;
  double accuracy = 0.0;
  double loss = 0.0;
  PhaseTimes phase_seconds;  // one entry per generation
  std::vector<LevelTrace> levels;
  std::size_t evaluations = 0;
  /// Generation index (0-based) at which the best score first reached the
  /// problem's optimum, when it did.
  std::optional<std::size_t> optimum_generation;
};

/// Uniform qubits, or angles uniform in the pole-safe range for RandomAngle.
std::vector<QuantumChromosome> init_population_uniform(std::size_t population, std::size_t genes, InitMode mode,
                                                       Rng& rng);

struct BlockGenome {
  enum class Kind : std::uint8_t { Plain, Pooling };
  std::vector<Kind> blocks;
  std::vector<std::pair<std::size_t, std::size_t>> connections;
  QuantumChromosome chromosome;
};

/// Random block layouts with the pooling count capped at pooling_cap(); the
/// best-scoring of cfg.candidates layouts is kept per individual.
/// evaluations, when given, is incremented by each fitness evaluation made.
std::vector<BlockGenome> init_population_blocks(std::size_t population, std::size_t genes,
                                                const BlockInitConfig& cfg, const Problem& problem,
                                                const BatchConfig& batches, Rng& rng,
                                                std::size_t* evaluations = nullptr);

/// Optional instrumentation. on_population sees the individuals after every
/// stage that touches genotypes ("init", "rotation", "offspring", "survivors").
struct RunHooks {
  std::function<void(std::string_view stage, std::span<const Individual> individuals)> on_population;
};

RunResult run_classical_ga(const EngineConfig& cfg, const Problem& problem, const RunHooks* hooks = nullptr);
RunResult run_qiga(const EngineConfig& cfg, const Problem& problem, const RunHooks* hooks = nullptr);
RunResult run_dqiga(const EngineConfig& cfg, const Problem& problem, const RunHooks* hooks = nullptr);
RunResult run_algorithm(Algorithm algorithm, const EngineConfig& cfg, const Problem& problem,
                        const RunHooks* hooks = nullptr);

}  // namespace qiga
