#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "qiga/qubit.hpp"

namespace qiga {

enum class TestCase : std::uint8_t { T1 = 0, T2 = 1, T3 = 2 };

TestCase test_case_from_number(int number);
int test_case_number(TestCase tc);

/// Constants that drive the rotation step for one test case.
///
/// The raw step of each magnitude case is branch / const_case, i.e. the
/// C_case / level_max factor with level_max cancelled, which keeps steps
/// sub-radian for any schedule. The linear anneal between theta_max and
/// theta_min caps the raw step.
struct RotationPolicy {
  TestCase test_case = TestCase::T1;
  double theta_min = 0.001 * std::numbers::pi;
  double theta_max = 0.001 * std::numbers::pi;
  double const_a = 1.0;
  double const_b = 20.0;
  double const_c = 400.0;
  std::size_t level_max = 1;

  /// The test case's rotation angle as theta_max, 0.001*pi as theta_min, b in {20, 25, 30},
  /// c in {400, 500, 600}.
  static RotationPolicy for_test_case(TestCase tc, std::size_t level_max = 1);
  void validate() const;
};

/// Rotation angle (radians) of a test case: 0.001 pi, 0.05 pi or 0.08 pi.
double table_rotation_angle(TestCase tc);

using Mat2 = std::array<std::array<double, 2>, 2>;

Mat2 rotation_matrix(double theta);

/// U(delta) applied to (alpha, beta), followed by the pole clamp.
Qubit apply_rotation(const Qubit& q, double signed_delta);

enum class Direction : std::uint8_t { Negative, Positive, Free };

/// Sign of the rotation from the determinant of the two state columns.
Direction rotation_direction(double theta_i, double theta_j);

/// theta_max - ((theta_max - theta_min) / reps) * epoch, with exact endpoints.
double annealed_cap(const RotationPolicy& policy, std::size_t epoch, std::size_t reps);

enum class MagnitudeCase : std::uint8_t { Case1, Case2, Case3, None };

double magnitude(const RotationPolicy& policy, MagnitudeCase mcase, double theta, std::uint8_t target_bit);

enum class SignToken : std::uint8_t { Plus, Minus, PlusMinus, Zero };

enum class Quadrant : std::uint8_t { BothPositive = 0, OppositeSigns = 1, AlphaZero = 2, BetaZero = 3 };

struct LookupKey {
  std::uint8_t x_bit = 0;
  std::uint8_t b_bit = 0;
  bool fx_ge_fb = false;
};

struct LookupRow {
  std::uint8_t x_bit;
  std::uint8_t b_bit;
  bool fx_ge_fb;
  /// [test case][quadrant]
  std::array<std::array<SignToken, 4>, 3> sign;
  /// [test case]
  std::array<MagnitudeCase, 3> magnitude;
};

/// The eight-row rotation lookup table, literal transcription. A copy in
/// human-readable form ships as data/rotation_table.tsv.
std::span<const LookupRow, 8> rotation_table();

const LookupRow& find_row(const LookupKey& key);

Quadrant classify_quadrant(const Qubit& q);

struct LookupResult {
  int sign = 0;
  MagnitudeCase mcase = MagnitudeCase::None;
};

/// Resolves the table cell for this key, qubit quadrant and test case. A '±'
/// cell is decided by rotation_direction(current theta, best_theta); a Free
/// direction resolves to +1.
LookupResult lookup(const LookupKey& key, const Qubit& q, const RotationPolicy& policy, double best_theta);
/// Same with the quadrant given explicitly. Clamped qubits never sit on a
/// pole, so the zero-amplitude columns are only reachable through this form.
LookupResult lookup(const LookupKey& key, Quadrant quadrant, double theta, const RotationPolicy& policy,
                    double best_theta);

Qubit rotate_gene(const Qubit& q, const LookupKey& key, const RotationPolicy& policy, std::size_t epoch,
                  std::size_t reps, double best_theta);

/// Scales the amplitude that disagrees with best_bit by c and rebuilds the
/// other as sqrt(1 - k).
Qubit boost_best(const Qubit& q, std::uint8_t best_bit, double c);

/// The best individual's measured bits and gene angles; genes past the end of
/// either read as bit 0 at the minimum angle.
struct RotationTarget {
  BinaryChromosome bits;
  std::vector<double> thetas;

  std::uint8_t bit(std::size_t i) const { return bits.padded(i); }
  double theta(std::size_t i) const { return i < thetas.size() ? thetas[i] : kMinTheta; }
};

struct BoostSettings {
  std::size_t epoch = 0;
  std::size_t reps = 1;
  double c = 0.95;
};

/// Rotation then boost for every gene of one chromosome.
QuantumChromosome update_chromosome(const QuantumChromosome& chromosome, const BinaryChromosome& measured,
                                    bool fx_ge_fb, const RotationTarget& target, const RotationPolicy& policy,
                                    const BoostSettings& settings);

/// Parallel over individuals; see kernels.hpp for the serial reference.
std::vector<QuantumChromosome> update_population(std::span<const QuantumChromosome> population,
                                                 const RotationTarget& target,
                                                 std::span<const BinaryChromosome> measured,
                                                 std::span<const std::uint8_t> fx_ge_fb,
                                                 const RotationPolicy& policy, const BoostSettings& settings);

std::string_view to_string(SignToken t);
std::string_view to_string(MagnitudeCase m);

}  // namespace qiga
