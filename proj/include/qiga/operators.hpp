#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qiga/fitness.hpp"
#include "qiga/qubit.hpp"
#include "qiga/rng.hpp"

namespace qiga {

struct Individual {
  QuantumChromosome genotype;
  BinaryChromosome phenotype;
  std::optional<FitnessStats> fitness;

  double score() const { return fitness ? fitness->score() : 0.0; }
  bool evaluated() const { return fitness.has_value(); }
};

/// Selection thresholds. mean_threshold and param_threshold are the tournament
/// thresholds, env_epsilon the survivor-contest threshold.
struct SelectionConfig {
  double mean_threshold = 0.01;
  double param_threshold = 5.0;
  double env_epsilon = 0.01;
  double elitism_fraction = 0.1;

  void validate() const;
};

/// std::weak_ordering::less means `a` is the better individual: lower mean
/// error, then lower std, then fewer active parameters.
std::weak_ordering compare_fitness(const FitnessStats& a, const FitnessStats& b);
inline bool better(const FitnessStats& a, const FitnessStats& b) { return compare_fitness(a, b) < 0; }

/// Index of the best evaluated individual, lowest index on ties.
std::size_t best_index(std::span<const Individual> pop);

/// Decides a tournament between two drawn individuals. top_score is the score
/// threshold for the "both maximum" branch: both contestants must score at
/// least the second-highest score in the population.
const Individual& tournament_contest(const Individual& first, const Individual& second, const SelectionConfig& cfg,
                                     double top_score, Rng& rng);

/// Score of the second entry of the population's scores sorted decreasingly
/// (the maximum for populations of one).
double tournament_top_score(std::span<const Individual> pop);

/// Binary tournament; returns the index of the winner.
std::size_t binary_tournament(std::span<const Individual> pop, const SelectionConfig& cfg, Rng& rng);
/// Same, with tournament_top_score(pop) precomputed by the caller.
std::size_t binary_tournament(std::span<const Individual> pop, const SelectionConfig& cfg, double top_score,
                              Rng& rng);

inline constexpr int kCrossoverRetries = 16;

/// Segment exchange between two equal-length genotypes. Offspring lose their
/// phenotype and fitness.
std::pair<Individual, Individual> crossover(const Individual& parent_i, const Individual& parent_j,
                                            double p_crossover, Rng& rng);
/// Deterministic core: exchange [pos1, pos1 + L) of a with [pos2, pos2 + L) of
/// b, L = min(len - pos1, len - pos2).
void exchange_segments(QuantumChromosome& a, QuantumChromosome& b, std::size_t pos1, std::size_t pos2);

enum class MutationOp : std::uint8_t { Addition, Remove, Modified, Swap, Inversion, Scramble };

struct LengthBounds {
  std::size_t min = 1;
  std::size_t max = 1;
  bool fixed() const { return min == max; }
};

/// Fixed-length operator set.
std::vector<MutationOp> fixed_length_ops();
/// Variable-length operator set (adds Addition and Remove).
std::vector<MutationOp> variable_length_ops();

Individual mutate(const Individual& ind, double mutation_rate, std::span<const MutationOp> allowed_ops,
                  const LengthBounds& bounds, Rng& rng);

void swap_genes(QuantumChromosome& c, std::size_t i, std::size_t j);
/// Reverses genes in [first, last] inclusive.
void invert_range(QuantumChromosome& c, std::size_t first, std::size_t last);
/// Uniformly permutes genes in [first, last] inclusive.
void scramble_range(QuantumChromosome& c, std::size_t first, std::size_t last, Rng& rng);

/// s <- max(s) + min(s) - s, in place.
void reflect_scores(std::span<double> scores);

struct ElitismResult {
  std::vector<double> scores;
  std::size_t best_index = 0;
};

/// Weight exchange between two random individuals followed by the opposition
/// reflection of the whole score list; best_index is the argmax of the
/// reflected scores over first occurrences of each distinct value.
ElitismResult elitism_update(std::span<const double> scores, std::span<const double> stds, Rng& rng);

/// Optional phase timers filled by generate_offspring (seconds).
struct OperatorTimes {
  double crossover = 0.0;
  double mutation = 0.0;
};

struct OffspringSettings {
  double p_crossover = 0.0;
  double mutation_rate = 0.0;
  std::vector<MutationOp> allowed_ops = fixed_length_ops();
  LengthBounds bounds;
};

/// Pairs pool members at random without replacement; each pair is crossed,
/// both children mutated and validated. Pairs of unequal length skip
/// crossover. Returns 2 * floor(|pool| / 2) offspring.
std::vector<Individual> generate_offspring(std::span<const Individual> pop, std::vector<std::size_t> mating_pool,
                                           const OffspringSettings& settings, Rng& rng,
                                           OperatorTimes* times = nullptr);

/// Survivor selection over current + offspring: round(elitism_fraction * n)
/// elites by compare_fitness, then (optionally) the protected candidate, then
/// pairwise contests between the two highest-scoring remaining candidates.
/// protected_index indexes the concatenation current ++ offspring.
std::vector<Individual> environment_select(std::span<const Individual> current, std::span<const Individual> offspring,
                                           const SelectionConfig& cfg, std::size_t n, Rng& rng,
                                           std::optional<std::size_t> protected_index = std::nullopt);

/// All qubits normalized within 1e-9 and inside the pole clamp.
bool well_formed(const QuantumChromosome& c);

}  // namespace qiga
