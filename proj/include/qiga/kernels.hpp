#pragma once

// Data-parallel inner loops of the engine. Every kernel has a serial
// reference in qiga::serial and an OpenMP version in qiga::parallel; the two
// must produce identical results (tests compare them) because all randomness
// comes from per-item keyed substreams.

#include <cstdint>
#include <span>
#include <vector>

#include "qiga/fitness.hpp"
#include "qiga/qubit.hpp"
#include "qiga/rotation.hpp"

namespace qiga {

/// Key of a family of per-item substreams: item i draws from
/// derive_substream(seed ^ salt(purpose), generation, i).
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t generation = 0;
  std::uint64_t purpose = 0;

  Rng stream(std::uint64_t index) const;
};

namespace serial {

std::vector<QuantumChromosome> update_population(std::span<const QuantumChromosome> population,
                                                 const RotationTarget& target,
                                                 std::span<const BinaryChromosome> measured,
                                                 std::span<const std::uint8_t> fx_ge_fb,
                                                 const RotationPolicy& policy, const BoostSettings& settings);

std::vector<BinaryChromosome> measure_population(std::span<const QuantumChromosome> population,
                                                 const StreamKey& key);

std::vector<FitnessStats> evaluate_fitness(const Problem& problem, std::span<const BinaryChromosome> phenotypes,
                                           const BatchConfig& batches);

/// Nearest-centroid class of every fitness sample over the selected features.
void nearest_centroid_predict(const CentroidModel& model, std::span<const std::uint32_t> selected,
                              std::span<std::uint8_t> predictions);

}  // namespace serial

namespace parallel {

std::vector<QuantumChromosome> update_population(std::span<const QuantumChromosome> population,
                                                 const RotationTarget& target,
                                                 std::span<const BinaryChromosome> measured,
                                                 std::span<const std::uint8_t> fx_ge_fb,
                                                 const RotationPolicy& policy, const BoostSettings& settings);

std::vector<BinaryChromosome> measure_population(std::span<const QuantumChromosome> population,
                                                 const StreamKey& key);

std::vector<FitnessStats> evaluate_fitness(const Problem& problem, std::span<const BinaryChromosome> phenotypes,
                                           const BatchConfig& batches);

void nearest_centroid_predict(const CentroidModel& model, std::span<const std::uint32_t> selected,
                              std::span<std::uint8_t> predictions);

}  // namespace parallel

}  // namespace qiga
