#include "qiga/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qiga/kernels.hpp"

namespace qiga {

FitnessStats batch_error_stats(std::span<const double> errors, std::size_t param_count) {
  if (errors.empty()) throw std::invalid_argument("batch_error_stats: no batch errors");
  const double n = static_cast<double>(errors.size());
  const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double ss = 0.0;
  for (const double e : errors) ss += (e - mean) * (e - mean);
  return FitnessStats{mean, std::sqrt(ss / n), param_count};
}

std::size_t BatchConfig::every_step() const {
  if (total_epochs == 0) throw std::invalid_argument("BatchConfig: total_epochs must be >= 1");
  return std::max<std::size_t>(1, fitness_set_size / total_epochs);
}

std::vector<std::pair<std::size_t, std::size_t>> BatchConfig::batch_ranges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (fitness_set_size == 0) return out;
  const std::size_t steps = every_step();
  const std::size_t size = fitness_set_size / steps;
  for (std::size_t b = 0; b < steps; ++b) {
    const std::size_t begin = b * size;
    const std::size_t end = (b + 1 == steps) ? fitness_set_size : begin + size;
    if (end > begin) out.emplace_back(begin, end);
  }
  return out;
}

double Problem::loss(const BinaryChromosome& bits, const BatchConfig& batches) const {
  const auto errors = batch_errors(bits, batches);
  return batch_error_stats(errors).mean_error;
}

FitnessStats evaluate_one(const Problem& problem, const BinaryChromosome& bits, const BatchConfig& batches) {
  const std::size_t n = problem.encoding_length();
  if (bits.size() > n) {
    throw std::invalid_argument("evaluate: phenotype of " + std::to_string(bits.size()) +
                                " bits exceeds encoding length " + std::to_string(n));
  }
  const BinaryChromosome padded = bits.size() == n ? bits : bits.padded_to(n);
  const auto errors = problem.batch_errors(padded, batches);
  return batch_error_stats(errors, padded.popcount());
}

std::vector<FitnessStats> evaluate_fitness(const Problem& problem, std::span<const BinaryChromosome> phenotypes,
                                           const BatchConfig& batches) {
  return parallel::evaluate_fitness(problem, phenotypes, batches);
}

// ---------------------------------------------------------------- OneMax

std::size_t onemax(const BinaryChromosome& bits) { return bits.popcount(); }

OneMaxProblem::OneMaxProblem(std::size_t length) : length_(length) {
  if (length == 0) throw std::invalid_argument("OneMax length must be >= 1");
}

std::string OneMaxProblem::name() const { return "onemax-" + std::to_string(length_); }

std::vector<double> OneMaxProblem::batch_errors(const BinaryChromosome& bits, const BatchConfig&) const {
  return {1.0 - static_cast<double>(onemax(bits)) / static_cast<double>(length_)};
}

// ---------------------------------------------------------------- knapsack

void KnapsackInstance::validate() const {
  if (weights.size() != values.size()) throw std::invalid_argument("knapsack: weights and values differ in size");
  if (capacity < 0) throw std::invalid_argument("knapsack: negative capacity");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0 || values[i] < 0) throw std::invalid_argument("knapsack: negative weight or value");
  }
}

KnapsackInstance make_knapsack_instance(std::size_t items, std::uint64_t seed) {
  Rng rng(splitmix64(seed ^ 0x4B4E4150ULL));
  KnapsackInstance inst;
  inst.weights.resize(items);
  inst.values.resize(items);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < items; ++i) {
    inst.weights[i] = rng.between(1, 30);
    inst.values[i] = rng.between(1, 50);
    total += inst.weights[i];
  }
  inst.capacity = total / 2;
  return inst;
}

std::int64_t knapsack_value(const BinaryChromosome& bits, const KnapsackInstance& inst) {
  if (bits.size() != inst.items()) throw std::invalid_argument("knapsack_value: bit count does not match items");
  std::int64_t weight = 0;
  std::int64_t value = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0) {
      weight += inst.weights[i];
      value += inst.values[i];
    }
  }
  return weight <= inst.capacity ? value : 0;
}

std::int64_t knapsack_dp_oracle(const KnapsackInstance& inst) {
  inst.validate();
  const auto cap = static_cast<std::size_t>(inst.capacity);
  if (static_cast<double>(cap) * static_cast<double>(inst.items()) > 1e7) {
    throw std::invalid_argument("knapsack_dp_oracle: capacity x items exceeds 1e7");
  }
  std::vector<std::int64_t> best(cap + 1, 0);
  for (std::size_t i = 0; i < inst.items(); ++i) {
    const auto w = static_cast<std::size_t>(inst.weights[i]);
    if (w > cap) continue;
    for (std::size_t c = cap; c + 1 > w; --c) {
      best[c] = std::max(best[c], best[c - w] + inst.values[i]);
      if (c == 0) break;
    }
  }
  return best[cap];
}

KnapsackProblem::KnapsackProblem(KnapsackInstance inst, std::optional<std::int64_t> optimum)
    : inst_(std::move(inst)), optimum_(optimum) {
  inst_.validate();
  if (inst_.items() == 0) throw std::invalid_argument("knapsack: instance has no items");
  const std::int64_t total = std::accumulate(inst_.values.begin(), inst_.values.end(), std::int64_t{0});
  const std::int64_t norm = optimum_.value_or(total);
  normalizer_ = norm > 0 ? static_cast<double>(norm) : 1.0;
}

std::string KnapsackProblem::name() const { return "knapsack-" + std::to_string(inst_.items()); }

std::vector<double> KnapsackProblem::batch_errors(const BinaryChromosome& bits, const BatchConfig&) const {
  return {1.0 - static_cast<double>(knapsack_value(bits, inst_)) / normalizer_};
}

std::optional<double> KnapsackProblem::optimum_score() const {
  if (optimum_) return static_cast<double>(*optimum_) / normalizer_;
  return std::nullopt;
}

// ---------------------------------------------------------------- datasets

std::size_t Dataset::classes() const {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows) throw std::out_of_range("Dataset::slice: range outside dataset");
  Dataset out;
  out.rows = end - begin;
  out.features = features;
  out.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(begin * features),
                    pixels.begin() + static_cast<std::ptrdiff_t>(end * features));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

namespace {

double standard_normal(Rng& rng) {
  // Box-Muller on (0, 1] so log never sees zero.
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

Dataset make_synthetic_digits(std::size_t samples, std::uint64_t seed, std::size_t side, std::size_t classes) {
  if (side < 4 || classes < 2 || classes > 255) throw std::invalid_argument("synthetic digits: bad shape");
  const std::size_t features = side * side;
  Rng rng(splitmix64(seed ^ 0x44494749ULL));

  std::vector<double> prototypes(classes * features, 0.0);
  const std::size_t blobs = 6;
  constexpr double kNoise = 0.5;
  const double lo = static_cast<double>(side) * 0.15;
  const double hi = static_cast<double>(side) * 0.85;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t b = 0; b < blobs; ++b) {
      const double cy = rng.uniform(lo, hi);
      const double cx = rng.uniform(lo, hi);
      const double radius = rng.uniform(1.2, 2.5);
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double dy = static_cast<double>(y) - cy;
          const double dx = static_cast<double>(x) - cx;
          double& p = prototypes[c * features + y * side + x];
          p = std::max(p, std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius)));
        }
      }
    }
  }

  Dataset out;
  out.rows = samples;
  out.features = features;
  out.pixels.resize(samples * features);
  out.labels.resize(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t c = s % classes;
    out.labels[s] = static_cast<std::uint8_t>(c);
    const double gain = rng.uniform(0.7, 1.0);
    // Small random translation, as in handwriting.
    const auto shift_y = static_cast<std::ptrdiff_t>(rng.below(5)) - 2;
    const auto shift_x = static_cast<std::ptrdiff_t>(rng.below(5)) - 2;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const auto sy = static_cast<std::ptrdiff_t>(y) - shift_y;
        const auto sx = static_cast<std::ptrdiff_t>(x) - shift_x;
        const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(side) &&
                            sx < static_cast<std::ptrdiff_t>(side);
        const double ink = inside ? prototypes[c * features + static_cast<std::size_t>(sy) * side +
                                               static_cast<std::size_t>(sx)]
                                  : 0.0;
        const double v = std::clamp(gain * ink + kNoise * standard_normal(rng), 0.0, 1.0);
        out.pixels[s * features + y * side + x] = static_cast<float>(std::round(v * 255.0) / 255.0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- nearest centroid

CentroidModel CentroidModel::fit(const Dataset& train, const Dataset& fitness) {
  if (train.rows == 0 || fitness.rows == 0) throw std::invalid_argument("centroid model: empty train or fitness set");
  if (train.features != fitness.features) {
    throw std::invalid_argument("centroid model: train has " + std::to_string(train.features) +
                                " features, fitness set has " + std::to_string(fitness.features));
  }
  CentroidModel m;
  m.features = train.features;
  m.classes = std::max(train.classes(), fitness.classes());
  m.samples = fitness.rows;
  m.labels = fitness.labels;

  std::vector<double> sums(m.classes * m.features, 0.0);
  std::vector<std::size_t> counts(m.classes, 0);
  for (std::size_t s = 0; s < train.rows; ++s) {
    const std::size_t c = train.labels[s];
    ++counts[c];
    const auto x = train.sample(s);
    for (std::size_t f = 0; f < m.features; ++f) sums[c * m.features + f] += x[f];
  }
  m.centroids.assign(m.classes * m.features, 0.0f);
  for (std::size_t c = 0; c < m.classes; ++c) {
    if (counts[c] == 0) {
      // A class absent from training can never be predicted.
      std::fill_n(m.centroids.begin() + static_cast<std::ptrdiff_t>(c * m.features), m.features,
                  std::numeric_limits<float>::max() / 1e6f);
      continue;
    }
    for (std::size_t f = 0; f < m.features; ++f) {
      m.centroids[c * m.features + f] = static_cast<float>(sums[c * m.features + f] / static_cast<double>(counts[c]));
    }
  }

  std::vector<double> var(m.features, 0.0);
  for (std::size_t s = 0; s < train.rows; ++s) {
    const std::size_t c = train.labels[s];
    const auto x = train.sample(s);
    for (std::size_t f = 0; f < m.features; ++f) {
      const double d = x[f] - m.centroids[c * m.features + f];
      var[f] += d * d;
    }
  }
  m.feature_variance.resize(m.features);
  for (std::size_t f = 0; f < m.features; ++f) {
    m.feature_variance[f] = static_cast<float>(var[f] / static_cast<double>(train.rows));
  }

  m.squared_diffs.resize(m.samples * m.features * m.classes);
  for (std::size_t s = 0; s < m.samples; ++s) {
    const auto x = fitness.sample(s);
    for (std::size_t f = 0; f < m.features; ++f) {
      float* row = m.squared_diffs.data() + (s * m.features + f) * m.classes;
      for (std::size_t c = 0; c < m.classes; ++c) {
        const float d = x[f] - m.centroids[c * m.features + f];
        row[c] = d * d;
      }
    }
  }
  return m;
}

namespace {

std::vector<std::uint32_t> selected_features(const BinaryChromosome& mask) {
  std::vector<std::uint32_t> out;
  out.reserve(mask.popcount());
  for (std::size_t f = 0; f < mask.size(); ++f) {
    if (mask[f] != 0) out.push_back(static_cast<std::uint32_t>(f));
  }
  return out;
}

}  // namespace

FeatureSelectionProblem::FeatureSelectionProblem(const Dataset& train, const Dataset& fitness)
    : model_(CentroidModel::fit(train, fitness)) {}

std::vector<double> FeatureSelectionProblem::batch_errors(const BinaryChromosome& bits,
                                                          const BatchConfig& batches) const {
  if (bits.size() != model_.features) {
    throw std::invalid_argument("feature mask has " + std::to_string(bits.size()) + " genes, dataset has " +
                                std::to_string(model_.features) + " features");
  }
  BatchConfig plan = batches;
  plan.fitness_set_size = model_.samples;
  const auto ranges = plan.batch_ranges();
  const auto selected = selected_features(bits);
  if (selected.empty()) return std::vector<double>(ranges.size(), 1.0);

  std::vector<std::uint8_t> predictions(model_.samples);
  // Individuals are already evaluated in parallel; the inner loop stays serial.
  serial::nearest_centroid_predict(model_, selected, predictions);
  std::vector<double> errors;
  errors.reserve(ranges.size());
  for (const auto& [begin, end] : ranges) {
    std::size_t wrong = 0;
    for (std::size_t s = begin; s < end; ++s) wrong += predictions[s] != model_.labels[s] ? 1 : 0;
    errors.push_back(static_cast<double>(wrong) / static_cast<double>(end - begin));
  }
  return errors;
}

double FeatureSelectionProblem::loss(const BinaryChromosome& bits, const BatchConfig&) const {
  const BinaryChromosome mask = bits.size() == model_.features ? bits : bits.padded_to(model_.features);
  const auto selected = selected_features(mask);
  if (selected.empty()) return std::log(static_cast<double>(model_.classes));
  double variance = 0.0;
  for (const auto f : selected) variance += model_.feature_variance[f];
  variance = std::max(variance / static_cast<double>(selected.size()), 1e-6);

  const std::size_t k = model_.classes;
  std::vector<double> logits(k);
  double total = 0.0;
  for (std::size_t s = 0; s < model_.samples; ++s) {
    std::fill(logits.begin(), logits.end(), 0.0);
    const float* base = model_.squared_diffs.data() + s * model_.features * k;
    for (const auto f : selected) {
      const float* row = base + static_cast<std::size_t>(f) * k;
      for (std::size_t c = 0; c < k; ++c) logits[c] -= row[c];
    }
    double top = -std::numeric_limits<double>::infinity();
    for (auto& l : logits) {
      l /= 2.0 * variance;
      top = std::max(top, l);
    }
    double z = 0.0;
    for (const double l : logits) z += std::exp(l - top);
    total += -(logits[model_.labels[s]] - top - std::log(z));
  }
  return total / static_cast<double>(model_.samples);
}

double FeatureSelectionProblem::full_feature_error() const {
  BatchConfig whole{model_.samples, model_.samples};
  return batch_error_stats(batch_errors(BinaryChromosome(std::vector<std::uint8_t>(model_.features, 1)), whole))
      .mean_error;
}

std::vector<double> feature_selection_error(const BinaryChromosome& mask, const Dataset& train,
                                            const Dataset& fitness, const BatchConfig& batches) {
  return FeatureSelectionProblem(train, fitness).batch_errors(mask, batches);
}

}  // namespace qiga
