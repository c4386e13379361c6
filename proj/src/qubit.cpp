#include "qiga/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qiga {

Qubit Qubit::clamped(double alpha, double beta) {
  const double theta = std::atan2(beta, alpha);
  if (theta >= kMinTheta && theta <= kMaxTheta) return Qubit(alpha, beta);
  return from_angle(theta);
}

Qubit Qubit::make(double alpha, double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw NormalizationError("qubit amplitudes must be finite");
  }
  const double norm2 = alpha * alpha + beta * beta;
  if (norm2 == 0.0) throw NormalizationError("qubit amplitudes (0, 0) cannot be normalized");
  if (std::abs(norm2 - 1.0) > 1e-6) {
    throw NormalizationError("qubit amplitudes deviate from unit norm: alpha^2 + beta^2 = " +
                             std::to_string(norm2));
  }
  const double norm = std::sqrt(norm2);
  return clamped(alpha / norm, beta / norm);
}

Qubit Qubit::from_angle(double theta) {
  const double t = std::clamp(theta, kMinTheta, kMaxTheta);
  return Qubit(std::cos(t), std::sin(t));
}

Qubit Qubit::uniform() {
  const double h = std::numbers::sqrt2 / 2.0;
  return Qubit(h, h);
}

double Qubit::theta() const { return std::atan2(beta_, alpha_); }

Qubit with_amplitudes(double alpha, double beta) { return Qubit::clamped(alpha, beta); }

std::size_t BinaryChromosome::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryChromosome BinaryChromosome::padded_to(std::size_t n) const {
  std::vector<std::uint8_t> out(bits_.begin(), bits_.begin() + static_cast<std::ptrdiff_t>(std::min(n, bits_.size())));
  out.resize(n, 0);
  return BinaryChromosome(std::move(out));
}

QuantumChromosome::QuantumChromosome(std::size_t length) : qubits_(length, Qubit::uniform()) {
  if (length == 0) throw std::invalid_argument("quantum chromosome length must be >= 1");
}

QuantumChromosome::QuantumChromosome(std::vector<Qubit> qubits) : qubits_(std::move(qubits)) {
  if (qubits_.empty()) throw std::invalid_argument("quantum chromosome length must be >= 1");
}

std::vector<double> QuantumChromosome::angles() const {
  std::vector<double> out(qubits_.size());
  std::transform(qubits_.begin(), qubits_.end(), out.begin(), [](const Qubit& q) { return q.theta(); });
  return out;
}

BinaryChromosome measure(const QuantumChromosome& chromosome, Rng& rng) {
  std::vector<std::uint8_t> bits(chromosome.length());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = rng.uniform01() < chromosome[i].prob_one() ? 1 : 0;
  }
  return BinaryChromosome(std::move(bits));
}

QuantumChromosome resize_chromosome(const QuantumChromosome& chromosome, std::size_t new_length) {
  if (new_length < chromosome.length()) {
    throw std::invalid_argument("resize_chromosome: cannot shrink from " +
                                std::to_string(chromosome.length()) + " to " +
                                std::to_string(new_length));
  }
  auto qubits = chromosome.qubits();
  qubits.resize(new_length, Qubit::uniform());
  return QuantumChromosome(std::move(qubits));
}

LevelSchedule level_schedule(std::size_t min_length, std::size_t max_length, std::size_t interval,
                             std::size_t total_iterations) {
  if (min_length < 1 || max_length < min_length) {
    throw std::invalid_argument("level_schedule: require 1 <= min_length <= max_length");
  }
  if (interval < 1) throw std::invalid_argument("level_schedule: interval must be >= 1");
  if ((max_length - min_length) % interval != 0) {
    throw std::invalid_argument("level_schedule: (max_length - min_length) = " +
                                std::to_string(max_length - min_length) +
                                " is not divisible by interval " + std::to_string(interval));
  }
  LevelSchedule s;
  s.min_length = min_length;
  s.max_length = max_length;
  s.interval = interval;
  s.level_max = (max_length - min_length) / interval + 1;
  if (total_iterations < s.level_max) {
    throw std::invalid_argument("level_schedule: total iterations " + std::to_string(total_iterations) +
                                " is smaller than the level count " + std::to_string(s.level_max));
  }
  const std::size_t k = s.level_max;
  const std::size_t triangular = k * (k + 1) / 2;
  s.lengths.resize(k);
  s.repetitions.resize(k);
  std::size_t assigned = 0;
  for (std::size_t level = 0; level < k; ++level) {
    s.lengths[level] = min_length + level * interval;
    s.repetitions[level] = (level + 1) * total_iterations / triangular;
    assigned += s.repetitions[level];
  }
  s.repetitions.back() += total_iterations - assigned;
  return s;
}

}  // namespace qiga
