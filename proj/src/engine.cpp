#include "qiga/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qiga/kernels.hpp"

namespace qiga {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Substream purposes; keys never collide across purposes.
enum Purpose : std::uint64_t {
  kInit = 1,
  kMeasure = 2,
  kSelect = 3,
  kOffspring = 4,
  kElitism = 5,
  kEnvironment = 6,
  kBlocks = 7,
};

StreamKey key(const EngineConfig& cfg, std::size_t generation, Purpose purpose) {
  return StreamKey{cfg.seed, generation, purpose};
}

// Evaluated individuals from genotypes and their measured phenotypes.
std::vector<Individual> assemble(std::vector<QuantumChromosome> genotypes, std::vector<BinaryChromosome> phenotypes,
                                 const std::vector<FitnessStats>& stats) {
  std::vector<Individual> out;
  out.reserve(genotypes.size());
  for (std::size_t i = 0; i < genotypes.size(); ++i) {
    out.push_back(Individual{std::move(genotypes[i]), std::move(phenotypes[i]), stats[i]});
  }
  return out;
}

double mean_score(std::span<const Individual> pop) {
  double sum = 0.0;
  for (const auto& ind : pop) sum += ind.score();
  return pop.empty() ? 0.0 : sum / static_cast<double>(pop.size());
}

void notify(const RunHooks* hooks, std::string_view stage, std::span<const Individual> pop) {
  if (hooks && hooks->on_population) hooks->on_population(stage, pop);
}

// Collapsed genotype for a classical bitstring.
QuantumChromosome genotype_of(const BinaryChromosome& bits) {
  std::vector<Qubit> q(std::max<std::size_t>(1, bits.size()), Qubit::from_angle(kMinTheta));
  for (std::size_t i = 0; i < bits.size(); ++i) q[i] = Qubit::from_angle(bits[i] ? kMaxTheta : kMinTheta);
  return QuantumChromosome(std::move(q));
}

class Recorder {
 public:
  Recorder(RunResult& result, const Problem& problem) : result_(result), optimum_(problem.optimum_score()) {}

  void generation(double best, double avg, double rotation, double mutation, double crossover) {
    if (optimum_ && !result_.optimum_generation && best >= *optimum_ - 1e-12) {
      result_.optimum_generation = result_.best_score.size();
    }
    result_.best_score.push_back(best);
    result_.avg_score.push_back(avg);
    result_.phase_seconds.rotation.push_back(rotation);
    result_.phase_seconds.mutation.push_back(mutation);
    result_.phase_seconds.crossover.push_back(crossover);
  }

 private:
  RunResult& result_;
  std::optional<double> optimum_;
};

void finish(RunResult& result, const Problem& problem, const BatchConfig& batches) {
  result.accuracy = 1.0 - result.best.fitness->mean_error;
  result.loss = problem.loss(result.best.phenotype.padded_to(problem.encoding_length()), batches);
}

bool reached_target(const EngineConfig& cfg, const Individual& best) {
  return cfg.target_score && best.score() >= *cfg.target_score;
}

// ------------------------------------------------------------------ quantum driver

class QuantumDriver {
 public:
  QuantumDriver(const EngineConfig& cfg, const Problem& problem, Algorithm algorithm, const RunHooks* hooks)
      : cfg_(cfg), problem_(problem), hooks_(hooks), recorder_(result_, problem) {
    result_.algorithm = algorithm;
  }

  RunResult run(const LevelSchedule& schedule, bool variable_length) {
    policy_ = cfg_.rotation_policy(schedule.level_max);
    max_length_ = schedule.max_length;
    bool started = false;
    for (std::size_t level = 0; level < schedule.level_max && !stopped_; ++level) {
      const std::size_t length = schedule.lengths[level];
      const std::size_t reps = schedule.repetitions[level];
      if (reps > 0) {
        if (!started) {
          initialize(length);
          started = true;
        } else {
          reinitialize(length);
        }
        const bool last = length == schedule.max_length;
        OffspringSettings settings;
        settings.p_crossover = cfg_.p_crossover;
        settings.mutation_rate = std::min(1.0, cfg_.p_mutation / static_cast<double>(length));
        if (variable_length && !last) {
          settings.allowed_ops = variable_length_ops();
          settings.bounds = LengthBounds{length, schedule.max_length};
        } else {
          settings.allowed_ops = fixed_length_ops();
          settings.bounds = LengthBounds{length, length};
        }
        for (std::size_t epoch = 1; epoch < reps && !stopped_; ++epoch) generation(epoch, reps, settings);
      }
      result_.levels.push_back(LevelTrace{level, length, reps, started ? best_.score() : 0.0});
    }
    result_.best = best_;
    finish(result_, problem_, cfg_.batches);
    return std::move(result_);
  }

 private:
  void evaluate_new(std::vector<QuantumChromosome> genotypes, std::vector<Individual>& into) {
    auto phenotypes = parallel::measure_population(genotypes, key(cfg_, generation_, kMeasure));
    const auto stats = evaluate_fitness(problem_, phenotypes, cfg_.batches);
    result_.evaluations += stats.size();
    auto fresh = assemble(std::move(genotypes), std::move(phenotypes), stats);
    std::move(fresh.begin(), fresh.end(), std::back_inserter(into));
  }

  void track_best(std::span<const Individual> pop) {
    const std::size_t b = best_index(pop);
    if (!best_.fitness || better(*pop[b].fitness, *best_.fitness)) best_ = pop[b];
  }

  void close_generation(double rotation, double mutation, double crossover) {
    recorder_.generation(best_.score(), mean_score(population_), rotation, mutation, crossover);
    ++generation_;
    if (reached_target(cfg_, best_) || generation_ >= cfg_.epochs) stopped_ = true;
  }

  void initialize(std::size_t length) {
    std::vector<QuantumChromosome> genotypes;
    Rng rng = key(cfg_, generation_, kInit).stream(0);
    if (cfg_.init_mode == InitMode::Blocks) {
      Rng block_rng = key(cfg_, generation_, kBlocks).stream(0);
      auto genomes = init_population_blocks(cfg_.population_size, length, cfg_.blocks, problem_, cfg_.batches,
                                            block_rng, &result_.evaluations);
      for (auto& g : genomes) genotypes.push_back(std::move(g.chromosome));
    } else {
      genotypes = init_population_uniform(cfg_.population_size, length, cfg_.init_mode, rng);
    }
    population_.clear();
    evaluate_new(std::move(genotypes), population_);
    notify(hooks_, "init", population_);
    track_best(population_);
    close_generation(0.0, 0.0, 0.0);
  }

  // Level transition: the elite keeps its genes (boosted towards its own bits)
  // and its zero-padded phenotype; everybody else restarts uniform.
  void reinitialize(std::size_t length) {
    Individual elite = best_;
    const std::size_t carried = elite.genotype.length();
    elite.genotype = resize_chromosome(elite.genotype, std::max(carried, length));
    for (std::size_t g = 0; g < carried; ++g) {
      elite.genotype[g] = boost_best(elite.genotype[g], elite.phenotype.padded(g), cfg_.boost_c);
    }
    elite.phenotype = elite.phenotype.padded_to(elite.genotype.length());

    std::vector<BinaryChromosome> elite_bits{elite.phenotype};
    const auto elite_stats = evaluate_fitness(problem_, elite_bits, cfg_.batches);
    result_.evaluations += 1;
    elite.fitness = elite_stats.front();

    population_.clear();
    population_.push_back(std::move(elite));
    std::vector<QuantumChromosome> fresh(cfg_.population_size - 1, QuantumChromosome(length));
    evaluate_new(std::move(fresh), population_);
    notify(hooks_, "init", population_);
    track_best(population_);
    close_generation(0.0, 0.0, 0.0);
  }

  void generation(std::size_t epoch, std::size_t reps, const OffspringSettings& settings) {
    const std::size_t n = cfg_.population_size;

    // Mating pool of tournament winners (one extra for odd populations so the
    // pairing yields exactly n offspring after truncation).
    Rng select_rng = key(cfg_, generation_, kSelect).stream(0);
    const double top = tournament_top_score(population_);
    std::vector<std::size_t> pool(n + (n % 2));
    for (auto& p : pool) p = binary_tournament(population_, cfg_.selection, top, select_rng);

    // Rotation towards the best-so-far.
    auto t0 = Clock::now();
    RotationTarget target{best_.phenotype.padded_to(max_length_), best_.genotype.angles()};
    std::vector<QuantumChromosome> genotypes;
    std::vector<BinaryChromosome> measured;
    std::vector<std::uint8_t> flags;
    genotypes.reserve(n);
    measured.reserve(n);
    flags.reserve(n);
    for (const auto& ind : population_) {
      genotypes.push_back(ind.genotype);
      measured.push_back(ind.phenotype);
      flags.push_back(ind.score() >= best_.score() ? 1 : 0);
    }
    auto rotated = update_population(genotypes, target, measured, flags, policy_,
                                     BoostSettings{epoch, reps, cfg_.boost_c});
    for (std::size_t i = 0; i < n; ++i) population_[i].genotype = std::move(rotated[i]);
    const double rotation_s = seconds_since(t0);
    notify(hooks_, "rotation", population_);

    // Crossover + mutation over the pool.
    Rng offspring_rng = key(cfg_, generation_, kOffspring).stream(0);
    OperatorTimes times;
    auto children = generate_offspring(population_, std::move(pool), settings, offspring_rng, &times);
    children.erase(children.begin() + static_cast<std::ptrdiff_t>(n), children.end());
    std::vector<QuantumChromosome> child_genotypes;
    child_genotypes.reserve(n);
    for (auto& c : children) child_genotypes.push_back(std::move(c.genotype));
    std::vector<Individual> offspring;
    offspring.reserve(n);
    evaluate_new(std::move(child_genotypes), offspring);
    notify(hooks_, "offspring", offspring);
    track_best(offspring);

    // Opposition-based elitism picks one protected survivor.
    std::vector<double> scores;
    std::vector<double> stds;
    scores.reserve(2 * n);
    stds.reserve(2 * n);
    for (const auto* group : {&population_, &offspring}) {
      for (const auto& ind : *group) {
        scores.push_back(ind.score());
        stds.push_back(ind.fitness->std_error);
      }
    }
    Rng elitism_rng = key(cfg_, generation_, kElitism).stream(0);
    const ElitismResult elite = elitism_update(scores, stds, elitism_rng);

    Rng env_rng = key(cfg_, generation_, kEnvironment).stream(0);
    population_ = environment_select(population_, offspring, cfg_.selection, n, env_rng, elite.best_index);
    notify(hooks_, "survivors", population_);

    close_generation(rotation_s, times.mutation, times.crossover);
  }

  const EngineConfig& cfg_;
  const Problem& problem_;
  const RunHooks* hooks_;
  RunResult result_;
  Recorder recorder_;
  RotationPolicy policy_;
  std::size_t max_length_ = 1;
  std::vector<Individual> population_;
  Individual best_;
  std::size_t generation_ = 0;
  bool stopped_ = false;
};

LevelSchedule resolve_schedule(const EngineConfig& cfg, const Problem& problem) {
  LevelConfig level = cfg.level.unset() ? LevelConfig::for_length(problem.encoding_length()) : cfg.level;
  if (level.max_length > problem.encoding_length()) {
    throw std::invalid_argument("D-QIGA max length " + std::to_string(level.max_length) +
                                " exceeds the problem encoding length " + std::to_string(problem.encoding_length()));
  }
  return level_schedule(level.min_length, level.max_length, level.interval, cfg.epochs);
}

}  // namespace

// ------------------------------------------------------------------ names

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::GA: return "ga";
    case Algorithm::QIGA: return "qiga";
    case Algorithm::DQIGA: return "dqiga";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "ga") return Algorithm::GA;
  if (name == "qiga") return Algorithm::QIGA;
  if (name == "dqiga" || name == "d-qiga") return Algorithm::DQIGA;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected ga, qiga or dqiga)");
}

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::Uniform: return "uniform";
    case InitMode::RandomAngle: return "random-angle";
    case InitMode::Blocks: return "blocks";
  }
  return "?";
}

InitMode init_mode_from_string(const std::string& name) {
  if (name == "uniform") return InitMode::Uniform;
  if (name == "random-angle") return InitMode::RandomAngle;
  if (name == "blocks") return InitMode::Blocks;
  throw std::invalid_argument("unknown init mode '" + name + "' (expected uniform, random-angle or blocks)");
}

// ------------------------------------------------------------------ configuration

LevelConfig LevelConfig::for_length(std::size_t length) {
  if (length < 4) return LevelConfig{1, std::max<std::size_t>(1, length), 1};
  const std::size_t interval = length / 4;
  return LevelConfig{length - 3 * interval, length, interval};
}

std::size_t BlockInitConfig::pooling_cap() const {
  if (d < 1) throw std::invalid_argument("block init: d must be >= 1");
  return static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(d))));
}

void BlockInitConfig::validate(std::size_t chromosome_length) const {
  if (n_min < 1 || n_min > n_max) throw std::invalid_argument("block init: require 1 <= n_min <= n_max");
  if (segment_length < 1) throw std::invalid_argument("block init: segment_length must be >= 1");
  if (candidates < 1) throw std::invalid_argument("block init: candidates must be >= 1");
  if (n_max * segment_length > chromosome_length) {
    throw std::invalid_argument("block init: n_max * segment_length = " + std::to_string(n_max * segment_length) +
                                " exceeds chromosome length " + std::to_string(chromosome_length));
  }
}

EngineConfig EngineConfig::for_test_case(TestCase tc) {
  EngineConfig cfg;
  constexpr std::array<double, 3> crossover{0.2, 0.4, 0.6};
  constexpr std::array<double, 3> mutation{0.5, 0.6, 0.8};
  const auto i = static_cast<std::size_t>(tc);
  cfg.rotation_test_case = tc;
  cfg.p_crossover = crossover[i];
  cfg.p_mutation = mutation[i];
  cfg.theta_min = table_rotation_angle(TestCase::T1);
  cfg.theta_max = table_rotation_angle(tc);
  return cfg;
}

void EngineConfig::validate() const {
  if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(p_crossover >= 0.0 && p_crossover <= 1.0)) throw std::invalid_argument("p_crossover must lie in [0, 1]");
  if (!(p_mutation >= 0.0 && p_mutation <= 1.0)) throw std::invalid_argument("p_mutation must lie in [0, 1]");
  if (!(theta_min <= theta_max)) throw std::invalid_argument("theta_min must not exceed theta_max");
  if (!(boost_c >= 0.0 && boost_c <= 1.0)) throw std::invalid_argument("boost_c must lie in [0, 1]");
  selection.validate();
}

RotationPolicy EngineConfig::rotation_policy(std::size_t level_max) const {
  RotationPolicy p = RotationPolicy::for_test_case(rotation_test_case, level_max);
  p.theta_min = theta_min;
  p.theta_max = theta_max;
  p.validate();
  return p;
}

// ------------------------------------------------------------------ initialization

std::vector<QuantumChromosome> init_population_uniform(std::size_t population, std::size_t genes, InitMode mode,
                                                       Rng& rng) {
  if (population < 2) throw std::invalid_argument("init_population: population must be >= 2");
  if (genes < 1) throw std::invalid_argument("init_population: genes must be >= 1");
  std::vector<QuantumChromosome> out;
  out.reserve(population);
  for (std::size_t p = 0; p < population; ++p) {
    if (mode == InitMode::RandomAngle) {
      std::vector<Qubit> q(genes);
      for (auto& qubit : q) qubit = Qubit::from_angle(rng.uniform(kMinTheta, kMaxTheta));
      out.emplace_back(std::move(q));
    } else {
      out.emplace_back(genes);
    }
  }
  return out;
}

std::vector<BlockGenome> init_population_blocks(std::size_t population, std::size_t genes,
                                                const BlockInitConfig& cfg, const Problem& problem,
                                                const BatchConfig& batches, Rng& rng, std::size_t* evaluations) {
  if (population < 2) throw std::invalid_argument("init_population: population must be >= 2");
  cfg.validate(genes);
  const std::size_t cap = cfg.pooling_cap();
  const std::size_t slots = genes / cfg.segment_length;
  const double background = std::numbers::pi / 16.0;
  const double pooled = std::numbers::pi / 8.0;

  std::vector<BlockGenome> out;
  out.reserve(population);
  for (std::size_t p = 0; p < population; ++p) {
    std::optional<BlockGenome> best;
    std::optional<FitnessStats> best_stats;
    for (std::size_t cand = 0; cand < cfg.candidates; ++cand) {
      const auto count = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.n_min),
                                                               static_cast<std::int64_t>(cfg.n_max)));
      BlockGenome genome{{}, {}, QuantumChromosome(std::vector<Qubit>(genes, Qubit::from_angle(background)))};
      std::size_t pooling = 0;
      for (std::size_t j = 0; j < count; ++j) {
        auto kind = rng.below(2) == 0 ? BlockGenome::Kind::Plain : BlockGenome::Kind::Pooling;
        if (kind == BlockGenome::Kind::Pooling && ++pooling > cap) {
          --pooling;
          kind = BlockGenome::Kind::Plain;
        }
        genome.blocks.push_back(kind);
        if (j > 0) genome.connections.emplace_back(j - 1, j);
      }
      // Distinct segment slots for each block.
      std::vector<std::size_t> slot_ids(slots);
      std::iota(slot_ids.begin(), slot_ids.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(slot_ids));
      for (std::size_t j = 0; j < count; ++j) {
        const double theta = genome.blocks[j] == BlockGenome::Kind::Pooling ? pooled : std::numbers::pi / 4.0;
        const std::size_t begin = slot_ids[j] * cfg.segment_length;
        for (std::size_t g = begin; g < begin + cfg.segment_length; ++g) genome.chromosome[g] = Qubit::from_angle(theta);
      }
      const auto bits = measure(genome.chromosome, rng);
      const FitnessStats stats = evaluate_one(problem, bits, batches);
      if (evaluations) ++*evaluations;
      if (!best_stats || better(stats, *best_stats)) {
        best_stats = stats;
        best = std::move(genome);
      }
    }
    out.push_back(std::move(*best));
  }
  return out;
}

// ------------------------------------------------------------------ drivers

RunResult run_qiga(const EngineConfig& cfg, const Problem& problem, const RunHooks* hooks) {
  cfg.validate();
  const std::size_t n = problem.encoding_length();
  const LevelSchedule single = level_schedule(n, n, 1, cfg.epochs);
  return QuantumDriver(cfg, problem, Algorithm::QIGA, hooks).run(single, false);
}

RunResult run_dqiga(const EngineConfig& cfg, const Problem& problem, const RunHooks* hooks) {
  cfg.validate();
  const LevelSchedule schedule = resolve_schedule(cfg, problem);
  return QuantumDriver(cfg, problem, Algorithm::DQIGA, hooks).run(schedule, true);
}

RunResult run_classical_ga(const EngineConfig& cfg, const Problem& problem, const RunHooks* hooks) {
  cfg.validate();
  const std::size_t n = problem.encoding_length();
  const std::size_t pop_size = cfg.population_size;
  const double flip_rate = std::min(1.0, cfg.p_mutation / static_cast<double>(n));

  RunResult result;
  result.algorithm = Algorithm::GA;
  Recorder recorder(result, problem);

  auto evaluate = [&](std::vector<BinaryChromosome> bits) {
    const auto stats = evaluate_fitness(problem, bits, cfg.batches);
    result.evaluations += stats.size();
    std::vector<Individual> out;
    out.reserve(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      out.push_back(Individual{genotype_of(bits[i]), std::move(bits[i]), stats[i]});
    }
    return out;
  };

  std::vector<BinaryChromosome> init(pop_size);
  const StreamKey init_key = key(cfg, 0, kInit);
  for (std::size_t i = 0; i < pop_size; ++i) {
    Rng rng = init_key.stream(i);
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
    init[i] = BinaryChromosome(std::move(bits));
  }
  std::vector<Individual> population = evaluate(std::move(init));
  notify(hooks, "init", population);
  Individual best = population[best_index(population)];
  recorder.generation(best.score(), mean_score(population), 0.0, 0.0, 0.0);

  for (std::size_t gen = 1; gen < cfg.epochs && !reached_target(cfg, best); ++gen) {
    Rng rng = key(cfg, gen, kOffspring).stream(0);
    auto tournament = [&]() -> const Individual& {
      const auto [i, j] = [&] {
        const auto a = static_cast<std::size_t>(rng.below(pop_size));
        auto b = static_cast<std::size_t>(rng.below(pop_size - 1));
        if (b >= a) ++b;
        return std::pair{a, b};
      }();
      return compare_fitness(*population[j].fitness, *population[i].fitness) < 0 ? population[j] : population[i];
    };

    double crossover_s = 0.0;
    double mutation_s = 0.0;
    std::vector<BinaryChromosome> children;
    children.reserve(pop_size + 1);
    while (children.size() < pop_size) {
      std::vector<std::uint8_t> a = tournament().phenotype.bits();
      std::vector<std::uint8_t> b = tournament().phenotype.bits();

      auto t0 = Clock::now();
      if (n >= 2 && rng.bernoulli(cfg.p_crossover)) {
        const auto cut = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(n - 1)));
        std::swap_ranges(a.begin() + static_cast<std::ptrdiff_t>(cut), a.end(),
                         b.begin() + static_cast<std::ptrdiff_t>(cut));
      }
      crossover_s += seconds_since(t0);

      t0 = Clock::now();
      for (auto* child : {&a, &b}) {
        for (auto& bit : *child) {
          if (rng.bernoulli(flip_rate)) bit ^= 1;
        }
      }
      mutation_s += seconds_since(t0);
      children.emplace_back(std::move(a));
      children.emplace_back(std::move(b));
    }
    children.resize(pop_size);
    population = evaluate(std::move(children));
    notify(hooks, "offspring", population);

    // Elitism of one: the best-so-far replaces the worst child.
    std::size_t worst = 0;
    for (std::size_t i = 1; i < pop_size; ++i) {
      if (better(*population[worst].fitness, *population[i].fitness)) worst = i;
    }
    const std::size_t child_best = best_index(population);
    if (better(*population[child_best].fitness, *best.fitness)) {
      population[worst] = best;
      best = population[child_best];
    } else {
      population[worst] = best;
    }
    notify(hooks, "survivors", population);
    recorder.generation(best.score(), mean_score(population), 0.0, mutation_s, crossover_s);
  }
  result.best = best;
  finish(result, problem, cfg.batches);
  return result;
}

RunResult run_algorithm(Algorithm algorithm, const EngineConfig& cfg, const Problem& problem,
                        const RunHooks* hooks) {
  switch (algorithm) {
    case Algorithm::GA: return run_classical_ga(cfg, problem, hooks);
    case Algorithm::QIGA: return run_qiga(cfg, problem, hooks);
    case Algorithm::DQIGA: return run_dqiga(cfg, problem, hooks);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace qiga
