#include "qiga/kernels.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <omp.h>

namespace qiga {

Rng StreamKey::stream(std::uint64_t index) const {
  return derive_substream(seed ^ splitmix64(purpose + 0x5145494741ULL), generation, index);
}

namespace {

void check_update_sizes(std::span<const QuantumChromosome> population, const RotationTarget& target,
                        std::span<const BinaryChromosome> measured, std::span<const std::uint8_t> fx_ge_fb) {
  if (measured.size() != population.size() || fx_ge_fb.size() != population.size()) {
    throw std::invalid_argument("update_population: population, measured bits and flags differ in size");
  }
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (measured[i].size() != population[i].length()) {
      throw std::invalid_argument("update_population: measured bits of individual " + std::to_string(i) +
                                  " do not match its chromosome length");
    }
    if (target.bits.size() < population[i].length()) {
      throw std::invalid_argument("update_population: best individual is shorter than individual " +
                                  std::to_string(i));
    }
  }
}

std::uint8_t argmin_class(const float* dist, std::size_t classes) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (dist[c] < dist[best]) best = c;
  }
  return static_cast<std::uint8_t>(best);
}

// Accumulates the masked squared distance of one sample to every centroid.
void sample_distances(const CentroidModel& model, std::size_t s, std::span<const std::uint32_t> selected,
                      float* dist) {
  const std::size_t k = model.classes;
  std::fill(dist, dist + k, 0.0f);
  const float* base = model.squared_diffs.data() + s * model.features * k;
  for (const std::uint32_t f : selected) {
    const float* row = base + static_cast<std::size_t>(f) * k;
#pragma omp simd
    for (std::size_t c = 0; c < k; ++c) dist[c] += row[c];
  }
}

constexpr std::size_t kMaxClasses = 256;

}  // namespace

namespace serial {

std::vector<QuantumChromosome> update_population(std::span<const QuantumChromosome> population,
                                                 const RotationTarget& target,
                                                 std::span<const BinaryChromosome> measured,
                                                 std::span<const std::uint8_t> fx_ge_fb,
                                                 const RotationPolicy& policy, const BoostSettings& settings) {
  check_update_sizes(population, target, measured, fx_ge_fb);
  std::vector<QuantumChromosome> out;
  out.reserve(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    out.push_back(update_chromosome(population[i], measured[i], fx_ge_fb[i] != 0, target, policy, settings));
  }
  return out;
}

std::vector<BinaryChromosome> measure_population(std::span<const QuantumChromosome> population,
                                                 const StreamKey& key) {
  std::vector<BinaryChromosome> out;
  out.reserve(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    Rng rng = key.stream(i);
    out.push_back(measure(population[i], rng));
  }
  return out;
}

std::vector<FitnessStats> evaluate_fitness(const Problem& problem, std::span<const BinaryChromosome> phenotypes,
                                           const BatchConfig& batches) {
  std::vector<FitnessStats> out;
  out.reserve(phenotypes.size());
  for (const auto& p : phenotypes) out.push_back(evaluate_one(problem, p, batches));
  return out;
}

void nearest_centroid_predict(const CentroidModel& model, std::span<const std::uint32_t> selected,
                              std::span<std::uint8_t> predictions) {
  if (predictions.size() != model.samples) throw std::invalid_argument("nearest_centroid_predict: size mismatch");
  if (model.classes > kMaxClasses) throw std::invalid_argument("nearest_centroid_predict: too many classes");
  float dist[kMaxClasses];
  for (std::size_t s = 0; s < model.samples; ++s) {
    sample_distances(model, s, selected, dist);
    predictions[s] = argmin_class(dist, model.classes);
  }
}

}  // namespace serial

namespace parallel {

std::vector<QuantumChromosome> update_population(std::span<const QuantumChromosome> population,
                                                 const RotationTarget& target,
                                                 std::span<const BinaryChromosome> measured,
                                                 std::span<const std::uint8_t> fx_ge_fb,
                                                 const RotationPolicy& policy, const BoostSettings& settings) {
  check_update_sizes(population, target, measured, fx_ge_fb);
  std::vector<QuantumChromosome> out(population.size());
  const auto n = static_cast<std::ptrdiff_t>(population.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = update_chromosome(population[u], measured[u], fx_ge_fb[u] != 0, target, policy, settings);
  }
  return out;
}

std::vector<BinaryChromosome> measure_population(std::span<const QuantumChromosome> population,
                                                 const StreamKey& key) {
  std::vector<BinaryChromosome> out(population.size());
  const auto n = static_cast<std::ptrdiff_t>(population.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    Rng rng = key.stream(u);
    out[u] = measure(population[u], rng);
  }
  return out;
}

std::vector<FitnessStats> evaluate_fitness(const Problem& problem, std::span<const BinaryChromosome> phenotypes,
                                           const BatchConfig& batches) {
  std::vector<FitnessStats> out(phenotypes.size());
  const auto n = static_cast<std::ptrdiff_t>(phenotypes.size());
  // Exceptions must not escape an OpenMP region; capture the first one.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = evaluate_one(problem, phenotypes[static_cast<std::size_t>(i)], batches);
    } catch (...) {
#pragma omp critical(qiga_eval_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

void nearest_centroid_predict(const CentroidModel& model, std::span<const std::uint32_t> selected,
                              std::span<std::uint8_t> predictions) {
  if (predictions.size() != model.samples) throw std::invalid_argument("nearest_centroid_predict: size mismatch");
  if (model.classes > kMaxClasses) throw std::invalid_argument("nearest_centroid_predict: too many classes");
  const auto n = static_cast<std::ptrdiff_t>(model.samples);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    float dist[kMaxClasses];
    sample_distances(model, static_cast<std::size_t>(s), selected, dist);
    predictions[static_cast<std::size_t>(s)] = argmin_class(dist, model.classes);
  }
}

}  // namespace parallel

}  // namespace qiga
