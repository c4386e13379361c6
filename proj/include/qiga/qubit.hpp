#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qiga/rng.hpp"

namespace qiga {

/// Angles are kept inside [kPoleEpsilon, pi/2 - kPoleEpsilon] so no qubit can
/// collapse permanently onto a basis state.
inline constexpr double kPoleEpsilon = 1e-3;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;
inline constexpr double kMinTheta = kPoleEpsilon;
inline constexpr double kMaxTheta = kHalfPi - kPoleEpsilon;

class NormalizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Real, first-quadrant two-amplitude state alpha|0> + beta|1>.
class Qubit {
 public:
  Qubit() : Qubit(uniform()) {}

  /// Validates and renormalizes (alpha, beta). Squared-sum deviations up to
  /// 1e-6 are renormalized; larger ones, and the zero vector, throw.
  static Qubit make(double alpha, double beta);
  /// State at angle theta, clamped into the pole-safe range.
  static Qubit from_angle(double theta);
  static Qubit uniform();

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double theta() const;
  /// Probability of measuring bit 1.
  double prob_one() const { return beta_ * beta_; }

  friend bool operator==(const Qubit&, const Qubit&) = default;

 private:
  Qubit(double alpha, double beta) : alpha_(alpha), beta_(beta) {}
  /// Clamp an already-normalized first-quadrant pair; rebuilds from the
  /// clamped angle only when the pair sits outside the safe range.
  static Qubit clamped(double alpha, double beta);

  friend Qubit with_amplitudes(double alpha, double beta);

  double alpha_;
  double beta_;
};

/// Builds a qubit from amplitudes that the caller guarantees are normalized
/// (e.g. by the sqrt(1 - k) construction); only the pole clamp is applied.
Qubit with_amplitudes(double alpha, double beta);

inline Qubit new_qubit(double alpha, double beta) { return Qubit::make(alpha, beta); }
inline Qubit uniform_qubit() { return Qubit::uniform(); }

class BinaryChromosome {
 public:
  BinaryChromosome() = default;
  explicit BinaryChromosome(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
  explicit BinaryChromosome(std::size_t n) : bits_(n, 0) {}

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  std::uint8_t& operator[](std::size_t i) { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t popcount() const;
  /// Bit i, with zeros past the end (zero-padded phenotype semantics).
  std::uint8_t padded(std::size_t i) const { return i < bits_.size() ? bits_[i] : 0; }
  BinaryChromosome padded_to(std::size_t n) const;

  friend bool operator==(const BinaryChromosome&, const BinaryChromosome&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

class QuantumChromosome {
 public:
  /// length uniform qubits; length must be >= 1.
  explicit QuantumChromosome(std::size_t length = 1);
  explicit QuantumChromosome(std::vector<Qubit> qubits);

  std::size_t length() const { return qubits_.size(); }
  const Qubit& operator[](std::size_t i) const { return qubits_[i]; }
  Qubit& operator[](std::size_t i) { return qubits_[i]; }
  const std::vector<Qubit>& qubits() const { return qubits_; }
  /// Mutable access for operators that reorder or resize genes. Callers must
  /// leave at least one qubit.
  std::vector<Qubit>& mutable_qubits() { return qubits_; }
  std::vector<double> angles() const;

  friend bool operator==(const QuantumChromosome&, const QuantumChromosome&) = default;

 private:
  std::vector<Qubit> qubits_;
};

/// Non-destructive observation: bit i is 1 when r < beta_i^2.
BinaryChromosome measure(const QuantumChromosome& chromosome, Rng& rng);

/// Lengthening only; appended genes are uniform qubits.
QuantumChromosome resize_chromosome(const QuantumChromosome& chromosome, std::size_t new_length);

struct LevelSchedule {
  std::size_t min_length = 1;
  std::size_t max_length = 1;
  std::size_t interval = 1;
  std::size_t level_max = 1;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> repetitions;
};

/// Number of accuracy levels is (max - min) / interval + 1; generation budget
/// m is spread proportionally to the level index over the triangular number
/// k(k+1)/2, floor per level with the remainder going to the last level.
LevelSchedule level_schedule(std::size_t min_length, std::size_t max_length, std::size_t interval,
                             std::size_t total_iterations);

}  // namespace qiga
