#include "qiga/operators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace qiga {

namespace {

constexpr double kTieTolerance = 1e-12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const FitnessStats& stats_of(const Individual& ind) {
  if (!ind.fitness) throw std::invalid_argument("selection requires evaluated individuals");
  return *ind.fitness;
}

std::pair<std::size_t, std::size_t> draw_distinct_pair(std::size_t n, Rng& rng) {
  const auto i = static_cast<std::size_t>(rng.below(n));
  auto j = static_cast<std::size_t>(rng.below(n - 1));
  if (j >= i) ++j;
  return {i, j};
}

bool first_wins(const Individual& first, const Individual& second, const SelectionConfig& cfg, double top_score,
                Rng& rng) {
  const FitnessStats& a = stats_of(first);
  const FitnessStats& b = stats_of(second);
  const bool both_top = a.score() >= top_score - kTieTolerance && b.score() >= top_score - kTieTolerance;
  if (!both_top) return rng.below(2) == 0;
  if (a.score() - b.score() > cfg.mean_threshold) return true;
  const double param_diff = static_cast<double>(a.param_count) - static_cast<double>(b.param_count);
  if (param_diff > cfg.param_threshold && a.std_error > b.std_error) return false;
  return true;
}

}  // namespace

void SelectionConfig::validate() const {
  if (mean_threshold < 0.0 || param_threshold < 0.0 || env_epsilon < 0.0) {
    throw std::invalid_argument("selection thresholds must be non-negative");
  }
  if (!(elitism_fraction >= 0.0 && elitism_fraction <= 1.0)) {
    throw std::invalid_argument("elitism_fraction must lie in [0, 1]");
  }
}

std::weak_ordering compare_fitness(const FitnessStats& a, const FitnessStats& b) {
  if (std::abs(a.mean_error - b.mean_error) > kTieTolerance) {
    return a.mean_error < b.mean_error ? std::weak_ordering::less : std::weak_ordering::greater;
  }
  if (std::abs(a.std_error - b.std_error) > kTieTolerance) {
    return a.std_error < b.std_error ? std::weak_ordering::less : std::weak_ordering::greater;
  }
  return a.param_count <=> b.param_count;
}

std::size_t best_index(std::span<const Individual> pop) {
  if (pop.empty()) throw std::invalid_argument("best_index: empty population");
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (better(stats_of(pop[i]), stats_of(pop[best]))) best = i;
  }
  return best;
}

double tournament_top_score(std::span<const Individual> pop) {
  if (pop.empty()) throw std::invalid_argument("binary_tournament: empty population");
  double first = -std::numeric_limits<double>::infinity();
  double second = first;
  for (const auto& ind : pop) {
    const double s = stats_of(ind).score();
    if (s > first) {
      second = first;
      first = s;
    } else if (s > second) {
      second = s;
    }
  }
  return pop.size() == 1 ? first : second;
}

const Individual& tournament_contest(const Individual& first, const Individual& second, const SelectionConfig& cfg,
                                     double top_score, Rng& rng) {
  return first_wins(first, second, cfg, top_score, rng) ? first : second;
}

std::size_t binary_tournament(std::span<const Individual> pop, const SelectionConfig& cfg, Rng& rng) {
  return binary_tournament(pop, cfg, tournament_top_score(pop), rng);
}

std::size_t binary_tournament(std::span<const Individual> pop, const SelectionConfig& cfg, double top_score,
                              Rng& rng) {
  if (pop.empty()) throw std::invalid_argument("binary_tournament: empty population");
  if (pop.size() == 1) return 0;
  const auto [i, j] = draw_distinct_pair(pop.size(), rng);
  return first_wins(pop[i], pop[j], cfg, top_score, rng) ? i : j;
}

// ---------------------------------------------------------------- crossover

void exchange_segments(QuantumChromosome& a, QuantumChromosome& b, std::size_t pos1, std::size_t pos2) {
  if (a.length() != b.length()) throw std::invalid_argument("exchange_segments: length mismatch");
  const std::size_t len = a.length();
  if (pos1 >= len || pos2 >= len) throw std::out_of_range("exchange_segments: position out of range");
  const std::size_t seg = std::min(len - pos1, len - pos2);
  auto& qa = a.mutable_qubits();
  auto& qb = b.mutable_qubits();
  std::swap_ranges(qa.begin() + static_cast<std::ptrdiff_t>(pos1),
                   qa.begin() + static_cast<std::ptrdiff_t>(pos1 + seg),
                   qb.begin() + static_cast<std::ptrdiff_t>(pos2));
}

std::pair<Individual, Individual> crossover(const Individual& parent_i, const Individual& parent_j,
                                            double p_crossover, Rng& rng) {
  if (parent_i.genotype.length() != parent_j.genotype.length()) {
    throw std::invalid_argument("crossover: parents differ in length (" +
                                std::to_string(parent_i.genotype.length()) + " vs " +
                                std::to_string(parent_j.genotype.length()) + ")");
  }
  if (!(p_crossover >= 0.0 && p_crossover <= 1.0)) throw std::invalid_argument("crossover: p outside [0, 1]");
  if (!rng.bernoulli(p_crossover)) return {parent_i, parent_j};

  const std::size_t len = parent_i.genotype.length();
  for (int attempt = 0; attempt < kCrossoverRetries; ++attempt) {
    QuantumChromosome a = parent_i.genotype;
    QuantumChromosome b = parent_j.genotype;
    exchange_segments(a, b, static_cast<std::size_t>(rng.below(len)), static_cast<std::size_t>(rng.below(len)));
    if (a.length() == len && b.length() == len && well_formed(a) && well_formed(b)) {
      return {Individual{std::move(a), {}, std::nullopt}, Individual{std::move(b), {}, std::nullopt}};
    }
  }
  return {parent_i, parent_j};
}

// ---------------------------------------------------------------- mutation

std::vector<MutationOp> fixed_length_ops() {
  return {MutationOp::Modified, MutationOp::Swap, MutationOp::Inversion, MutationOp::Scramble};
}

std::vector<MutationOp> variable_length_ops() {
  return {MutationOp::Addition, MutationOp::Remove,    MutationOp::Modified,
          MutationOp::Swap,     MutationOp::Inversion, MutationOp::Scramble};
}

void swap_genes(QuantumChromosome& c, std::size_t i, std::size_t j) {
  auto& q = c.mutable_qubits();
  std::swap(q.at(i), q.at(j));
}

void invert_range(QuantumChromosome& c, std::size_t first, std::size_t last) {
  auto& q = c.mutable_qubits();
  if (last >= q.size()) throw std::out_of_range("invert_range: position out of range");
  while (first < last) {
    std::swap(q[first], q[last]);
    ++first;
    --last;
  }
}

void scramble_range(QuantumChromosome& c, std::size_t first, std::size_t last, Rng& rng) {
  auto& q = c.mutable_qubits();
  if (first > last || last >= q.size()) throw std::out_of_range("scramble_range: bad range");
  rng.shuffle(std::span<Qubit>(q.data() + first, last - first + 1));
}

Individual mutate(const Individual& ind, double mutation_rate, std::span<const MutationOp> allowed_ops,
                  const LengthBounds& bounds, Rng& rng) {
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw std::invalid_argument("mutate: rate outside [0, 1]");
  if (allowed_ops.empty()) throw std::invalid_argument("mutate: no operations allowed");
  if (bounds.min < 1 || bounds.min > bounds.max) throw std::invalid_argument("mutate: bad length bounds");
  const bool resizing = std::any_of(allowed_ops.begin(), allowed_ops.end(), [](MutationOp op) {
    return op == MutationOp::Addition || op == MutationOp::Remove;
  });
  if (resizing && bounds.fixed()) {
    throw std::invalid_argument("mutate: Addition/Remove are not allowed in fixed-length mode");
  }
  const std::size_t start_len = ind.genotype.length();
  if (start_len < bounds.min || start_len > bounds.max) {
    throw std::invalid_argument("mutate: individual length " + std::to_string(start_len) + " outside bounds");
  }

  Individual out = ind;
  auto& q = out.genotype.mutable_qubits();
  bool changed = false;
  for (std::size_t trial = 0; trial < start_len; ++trial) {
    if (!(rng.uniform01() < mutation_rate)) continue;
    const MutationOp op = allowed_ops[static_cast<std::size_t>(rng.below(allowed_ops.size()))];
    const std::size_t len = q.size();
    switch (op) {
      case MutationOp::Addition:
        if (len < bounds.max) {
          q.insert(q.begin() + static_cast<std::ptrdiff_t>(rng.below(len + 1)), Qubit::uniform());
          changed = true;
        }
        break;
      case MutationOp::Remove:
        if (len > bounds.min) {
          q.erase(q.begin() + static_cast<std::ptrdiff_t>(rng.below(len)));
          changed = true;
        }
        break;
      case MutationOp::Modified: {
        const auto pos = static_cast<std::size_t>(rng.below(len));
        q[pos] = Qubit::from_angle(rng.uniform(kMinTheta, kMaxTheta));
        changed = true;
        break;
      }
      case MutationOp::Swap: {
        const auto i = static_cast<std::size_t>(rng.below(len));
        const auto j = static_cast<std::size_t>(rng.below(len));
        swap_genes(out.genotype, i, j);
        changed = true;
        break;
      }
      case MutationOp::Inversion: {
        auto a = static_cast<std::size_t>(rng.below(len));
        auto b = static_cast<std::size_t>(rng.below(len));
        if (a > b) std::swap(a, b);
        invert_range(out.genotype, a, b);
        changed = true;
        break;
      }
      case MutationOp::Scramble: {
        auto a = static_cast<std::size_t>(rng.below(len));
        auto b = static_cast<std::size_t>(rng.below(len));
        if (a > b) std::swap(a, b);
        scramble_range(out.genotype, a, b, rng);
        changed = true;
        break;
      }
    }
  }
  if (changed) {
    out.phenotype = BinaryChromosome();
    out.fitness.reset();
  }
  return out;
}

// ---------------------------------------------------------------- elitism

void reflect_scores(std::span<double> scores) {
  if (scores.empty()) return;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double sum = *lo + *hi;
  for (double& s : scores) s = sum - s;
}

ElitismResult elitism_update(std::span<const double> scores, std::span<const double> stds, Rng& rng) {
  if (scores.size() < 2) throw std::invalid_argument("elitism_update: need at least two individuals");
  if (stds.size() != scores.size()) throw std::invalid_argument("elitism_update: scores and stds differ in size");
  ElitismResult out;
  out.scores.assign(scores.begin(), scores.end());
  const auto [i, j] = draw_distinct_pair(scores.size(), rng);
  const double temp = std::abs(rng.uniform01() * (out.scores[j] - out.scores[i]));
  if (stds[i] < stds[j]) {
    out.scores[i] += temp;
  } else {
    out.scores[j] += temp;
  }
  reflect_scores(out.scores);

  std::unordered_set<double> seen;
  bool have = false;
  for (std::size_t k = 0; k < out.scores.size(); ++k) {
    if (!seen.insert(out.scores[k]).second) continue;
    if (!have || out.scores[k] > out.scores[out.best_index]) {
      out.best_index = k;
      have = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------- offspring

bool well_formed(const QuantumChromosome& c) {
  return std::all_of(c.qubits().begin(), c.qubits().end(), [](const Qubit& q) {
    const double n = q.alpha() * q.alpha() + q.beta() * q.beta();
    const double t = q.theta();
    return std::abs(n - 1.0) <= 1e-9 && t >= kMinTheta - 1e-12 && t <= kMaxTheta + 1e-12;
  });
}

std::vector<Individual> generate_offspring(std::span<const Individual> pop, std::vector<std::size_t> mating_pool,
                                           const OffspringSettings& settings, Rng& rng, OperatorTimes* times) {
  for (const auto idx : mating_pool) {
    if (idx >= pop.size()) throw std::out_of_range("generate_offspring: pool index outside population");
  }
  auto take = [&]() {
    const auto k = static_cast<std::size_t>(rng.below(mating_pool.size()));
    const std::size_t idx = mating_pool[k];
    mating_pool[k] = mating_pool.back();
    mating_pool.pop_back();
    return idx;
  };

  std::vector<Individual> out;
  out.reserve(mating_pool.size() & ~std::size_t{1});
  while (mating_pool.size() >= 2) {
    const Individual& a = pop[take()];
    const Individual& b = pop[take()];

    auto t0 = Clock::now();
    std::pair<Individual, Individual> children =
        a.genotype.length() == b.genotype.length() ? crossover(a, b, settings.p_crossover, rng)
                                                   : std::pair<Individual, Individual>{a, b};
    if (times) times->crossover += seconds_since(t0);

    t0 = Clock::now();
    for (Individual* child : {&children.first, &children.second}) {
      *child = mutate(*child, settings.mutation_rate, settings.allowed_ops, settings.bounds, rng);
      const std::size_t len = child->genotype.length();
      if (!well_formed(child->genotype) || len < settings.bounds.min || len > settings.bounds.max) {
        throw std::logic_error("generate_offspring: produced an invalid offspring");
      }
      child->phenotype = BinaryChromosome();
      child->fitness.reset();
    }
    if (times) times->mutation += seconds_since(t0);

    out.push_back(std::move(children.first));
    out.push_back(std::move(children.second));
  }
  return out;
}

// ---------------------------------------------------------------- environment selection

std::vector<Individual> environment_select(std::span<const Individual> current, std::span<const Individual> offspring,
                                           const SelectionConfig& cfg, std::size_t n, Rng& rng,
                                           std::optional<std::size_t> protected_index) {
  const std::size_t total = current.size() + offspring.size();
  if (total < n) {
    throw std::invalid_argument("environment_select: " + std::to_string(total) + " candidates for " +
                                std::to_string(n) + " slots");
  }
  auto at = [&](std::size_t k) -> const Individual& {
    return k < current.size() ? current[k] : offspring[k - current.size()];
  };
  for (std::size_t k = 0; k < total; ++k) (void)stats_of(at(k));

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return better(*at(x).fitness, *at(y).fitness); });

  const auto elites = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(cfg.elitism_fraction * static_cast<double>(n))));
  std::vector<char> taken(total, 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  for (std::size_t e = 0; e < elites; ++e) {
    chosen.push_back(order[e]);
    taken[order[e]] = 1;
  }
  if (protected_index && chosen.size() < n) {
    if (*protected_index >= total) throw std::out_of_range("environment_select: protected index out of range");
    if (!taken[*protected_index]) {
      chosen.push_back(*protected_index);
      taken[*protected_index] = 1;
    }
  }

  std::vector<std::size_t> remaining;
  remaining.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    if (!taken[k]) remaining.push_back(k);
  }
  std::stable_sort(remaining.begin(), remaining.end(),
                   [&](std::size_t x, std::size_t y) { return at(x).score() > at(y).score(); });

  std::size_t head = 0;
  while (chosen.size() < n) {
    if (head + 1 >= remaining.size()) {
      chosen.push_back(remaining[head++]);
      continue;
    }
    const FitnessStats& a = *at(remaining[head]).fitness;
    const FitnessStats& b = *at(remaining[head + 1]).fitness;
    bool take_first;
    if (a.score() - b.score() > cfg.env_epsilon) {
      take_first = true;
    } else if (a.std_error < b.std_error) {
      take_first = true;
    } else if (b.std_error < a.std_error) {
      take_first = false;
    } else {
      take_first = rng.below(2) == 0;
    }
    if (!take_first) std::swap(remaining[head], remaining[head + 1]);
    chosen.push_back(remaining[head++]);
  }

  std::vector<Individual> out;
  out.reserve(n);
  for (const auto k : chosen) out.push_back(at(k));
  return out;
}

}  // namespace qiga
