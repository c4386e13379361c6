#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qiga/qubit.hpp"

namespace qiga {

/// Classification-error statistics of one phenotype. Lower mean error is
/// better; selection operators work on score() = 1 - mean_error.
struct FitnessStats {
  double mean_error = 1.0;
  double std_error = 0.0;
  std::size_t param_count = 0;

  double score() const { return 1.0 - mean_error; }
  friend bool operator==(const FitnessStats&, const FitnessStats&) = default;
};

/// Mean and population standard deviation of per-batch errors.
FitnessStats batch_error_stats(std::span<const double> errors, std::size_t param_count = 0);

/// The fitness set is cut into every_step() = |fitness set| / total_epochs
/// batches of total_epochs samples; the remainder is folded into the last
/// batch. Sets smaller than total_epochs form a single batch.
struct BatchConfig {
  std::size_t total_epochs = 100;
  std::size_t fitness_set_size = 0;

  std::size_t every_step() const;
  /// Half-open [begin, end) sample ranges, all non-empty.
  std::vector<std::pair<std::size_t, std::size_t>> batch_ranges() const;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t encoding_length() const = 0;
  /// Per-batch error fractions for a phenotype of exactly encoding_length()
  /// bits. Batches without samples are never reported.
  virtual std::vector<double> batch_errors(const BinaryChromosome& bits, const BatchConfig& batches) const = 0;
  virtual std::size_t evaluation_set_size() const { return 0; }
  /// Best achievable score (1 - mean_error) when known.
  virtual std::optional<double> optimum_score() const { return std::nullopt; }
  /// Problem-specific loss of a final phenotype; mean error unless overridden.
  virtual double loss(const BinaryChromosome& bits, const BatchConfig& batches) const;
};

/// Zero-pads bits to the problem's encoding length, evaluates batches and
/// reduces them; param_count is the number of active genes.
FitnessStats evaluate_one(const Problem& problem, const BinaryChromosome& bits, const BatchConfig& batches);

/// Parallel over phenotypes; serial reference in kernels.hpp.
std::vector<FitnessStats> evaluate_fitness(const Problem& problem, std::span<const BinaryChromosome> phenotypes,
                                           const BatchConfig& batches);

std::size_t onemax(const BinaryChromosome& bits);

class OneMaxProblem final : public Problem {
 public:
  explicit OneMaxProblem(std::size_t length);
  std::string name() const override;
  std::size_t encoding_length() const override { return length_; }
  std::vector<double> batch_errors(const BinaryChromosome& bits, const BatchConfig& batches) const override;
  std::optional<double> optimum_score() const override { return 1.0; }

 private:
  std::size_t length_;
};

struct KnapsackInstance {
  std::vector<std::int64_t> weights;
  std::vector<std::int64_t> values;
  std::int64_t capacity = 0;

  std::size_t items() const { return weights.size(); }
  void validate() const;
};

/// Seeded integer instance: weights in [1, 30], values in [1, 50], capacity
/// half the total weight.
KnapsackInstance make_knapsack_instance(std::size_t items, std::uint64_t seed);

/// Total value when feasible, 0 otherwise (death penalty).
std::int64_t knapsack_value(const BinaryChromosome& bits, const KnapsackInstance& inst);

/// Exact optimum by dynamic programming over capacity.
std::int64_t knapsack_dp_oracle(const KnapsackInstance& inst);

class KnapsackProblem final : public Problem {
 public:
  /// Errors are 1 - value / normalizer, the normalizer being the known
  /// optimum when given and the sum of all values otherwise.
  explicit KnapsackProblem(KnapsackInstance inst, std::optional<std::int64_t> optimum = std::nullopt);
  std::string name() const override;
  std::size_t encoding_length() const override { return inst_.items(); }
  std::vector<double> batch_errors(const BinaryChromosome& bits, const BatchConfig& batches) const override;
  std::optional<double> optimum_score() const override;
  const KnapsackInstance& instance() const { return inst_; }
  double normalizer() const { return normalizer_; }

 private:
  KnapsackInstance inst_;
  std::optional<std::int64_t> optimum_;
  double normalizer_;
};

/// Row-major samples with gray values in [0, 1].
struct Dataset {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::vector<float> pixels;
  std::vector<std::uint8_t> labels;

  std::size_t classes() const;
  std::span<const float> sample(std::size_t i) const { return {pixels.data() + i * features, features}; }
  Dataset slice(std::size_t begin, std::size_t end) const;
};

/// Ten clustered classes of side x side "images": each class paints a few
/// random Gaussian blobs, samples add bounded noise. Pixels are quantized to
/// k/255 so the set round-trips through IDX files exactly.
Dataset make_synthetic_digits(std::size_t samples, std::uint64_t seed, std::size_t side = 28,
                              std::size_t classes = 10);

/// Nearest-centroid model: class means over the training set, plus the squared
/// sample-to-centroid differences of the fitness set laid out
/// [sample][feature][class] so masked distances are contiguous sums.
struct CentroidModel {
  std::size_t features = 0;
  std::size_t classes = 0;
  std::size_t samples = 0;
  std::vector<float> centroids;        // [class][feature]
  std::vector<float> squared_diffs;    // [sample][feature][class]
  std::vector<std::uint8_t> labels;    // fitness-set labels
  std::vector<float> feature_variance; // pooled within-class variance per feature (train)

  static CentroidModel fit(const Dataset& train, const Dataset& fitness);
};

class FeatureSelectionProblem final : public Problem {
 public:
  FeatureSelectionProblem(const Dataset& train, const Dataset& fitness);
  std::string name() const override { return "feature-selection"; }
  std::size_t encoding_length() const override { return model_.features; }
  std::vector<double> batch_errors(const BinaryChromosome& bits, const BatchConfig& batches) const override;
  std::size_t evaluation_set_size() const override { return model_.samples; }
  /// Cross-entropy of the isotropic-Gaussian class posterior over the
  /// selected features.
  double loss(const BinaryChromosome& bits, const BatchConfig& batches) const override;
  const CentroidModel& model() const { return model_; }
  /// Error of the all-features classifier on the fitness set.
  double full_feature_error() const;

 private:
  CentroidModel model_;
};

/// Per-batch nearest-centroid errors of a feature mask. An empty mask scores
/// error 1.0 on every batch.
std::vector<double> feature_selection_error(const BinaryChromosome& mask, const Dataset& train,
                                            const Dataset& fitness, const BatchConfig& batches);

}  // namespace qiga
