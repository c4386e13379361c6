#include "qiga/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qiga/kernels.hpp"

namespace qiga {

namespace {

constexpr double kZeroTolerance = 1e-9;
constexpr double kDeterminantTolerance = 1e-12;

using enum SignToken;
using enum MagnitudeCase;

constexpr SignToken P = Plus;
constexpr SignToken M = Minus;
constexpr SignToken B = PlusMinus;
constexpr SignToken Z = Zero;

// Columns per row: quadrant (ab>0, ab<0, a=0, b=0) x test case (T1, T2, T3),
// stored [test case][quadrant]; then the delta-theta case per test case.
constexpr std::array<LookupRow, 8> kTable{{
    {0, 0, false, {{{Z, Z, Z, Z}, {M, P, B, B}, {M, P, B, Z}}}, {None, Case1, Case1}},
    {0, 0, true, {{{Z, Z, Z, Z}, {M, P, B, B}, {M, P, B, Z}}}, {None, Case1, Case1}},
    {0, 1, false, {{{Z, Z, Z, Z}, {M, P, B, B}, {P, P, Z, B}}}, {None, Case3, Case1}},
    {0, 1, true, {{{M, P, B, Z}, {M, P, B, B}, {M, P, B, Z}}}, {Case2, Case2, Case1}},
    {1, 0, false, {{{M, P, B, Z}, {P, M, B, B}, {M, M, B, Z}}}, {Case1, Case1, Case1}},
    {1, 0, true, {{{P, M, Z, B}, {P, M, B, B}, {P, P, Z, B}}}, {Case3, Case3, Case1}},
    {1, 1, false, {{{P, M, Z, B}, {P, M, B, B}, {P, P, Z, B}}}, {Case1, Case1, Case1}},
    {1, 1, true, {{{P, M, Z, B}, {P, M, B, B}, {P, M, Z, B}}}, {Case3, Case1, Case1}},
}};

}  // namespace

TestCase test_case_from_number(int number) {
  switch (number) {
    case 1: return TestCase::T1;
    case 2: return TestCase::T2;
    case 3: return TestCase::T3;
    default: throw std::invalid_argument("test case must be 1, 2 or 3, got " + std::to_string(number));
  }
}

int test_case_number(TestCase tc) { return static_cast<int>(tc) + 1; }

double table_rotation_angle(TestCase tc) {
  constexpr std::array<double, 3> angles{0.001, 0.05, 0.08};
  return angles[static_cast<std::size_t>(tc)] * std::numbers::pi;
}

RotationPolicy RotationPolicy::for_test_case(TestCase tc, std::size_t level_max) {
  constexpr std::array<double, 3> b{20.0, 25.0, 30.0};
  constexpr std::array<double, 3> c{400.0, 500.0, 600.0};
  const auto i = static_cast<std::size_t>(tc);
  RotationPolicy p;
  p.test_case = tc;
  p.theta_min = table_rotation_angle(TestCase::T1);
  p.theta_max = table_rotation_angle(tc);
  p.const_a = 1.0;
  p.const_b = b[i];
  p.const_c = c[i];
  p.level_max = level_max;
  return p;
}

void RotationPolicy::validate() const {
  if (!(theta_min > 0.0 && theta_min <= theta_max && theta_max <= kHalfPi)) {
    throw std::invalid_argument("rotation policy requires 0 < theta_min <= theta_max <= pi/2");
  }
  if (!(const_a > 0.0 && const_b > 0.0 && const_c > 0.0)) {
    throw std::invalid_argument("rotation policy constants must be positive");
  }
  if (level_max < 1) throw std::invalid_argument("rotation policy level_max must be >= 1");
}

Mat2 rotation_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {{{c, -s}, {s, c}}};
}

Qubit apply_rotation(const Qubit& q, double signed_delta) {
  if (signed_delta == 0.0) return q;
  const double target = q.theta() + signed_delta;
  if (target < kMinTheta || target > kMaxTheta) return Qubit::from_angle(target);
  const Mat2 u = rotation_matrix(signed_delta);
  const double a = u[0][0] * q.alpha() + u[0][1] * q.beta();
  const double b = u[1][0] * q.alpha() + u[1][1] * q.beta();
  const double norm = std::hypot(a, b);
  return with_amplitudes(a / norm, b / norm);
}

Direction rotation_direction(double theta_i, double theta_j) {
  const double delta = theta_j - theta_i;
  if (std::abs(std::sin(delta)) <= kDeterminantTolerance) return Direction::Free;
  const double mag = std::abs(delta);
  if (mag <= std::numbers::pi) return Direction::Negative;
  return Direction::Positive;
}

double annealed_cap(const RotationPolicy& policy, std::size_t epoch, std::size_t reps) {
  if (reps == 0) throw std::invalid_argument("annealed_cap: reps must be >= 1");
  if (epoch > reps) throw std::invalid_argument("annealed_cap: epoch exceeds reps");
  if (epoch == 0) return policy.theta_max;
  if (epoch == reps) return policy.theta_min;
  const double slope = (policy.theta_max - policy.theta_min) / static_cast<double>(reps);
  return policy.theta_max - slope * static_cast<double>(epoch);
}

double magnitude(const RotationPolicy& policy, MagnitudeCase mcase, double theta, std::uint8_t target_bit) {
  double divisor = 0.0;
  switch (mcase) {
    case Case1: divisor = policy.const_a; break;
    case Case2: divisor = policy.const_b; break;
    case Case3: divisor = policy.const_c; break;
    case None: return 0.0;
  }
  const double branch = target_bit != 0 ? (kHalfPi - theta) : theta;
  return std::abs(branch / divisor);
}

std::span<const LookupRow, 8> rotation_table() { return kTable; }

const LookupRow& find_row(const LookupKey& key) {
  for (const auto& row : kTable) {
    if (row.x_bit == key.x_bit && row.b_bit == key.b_bit && row.fx_ge_fb == key.fx_ge_fb) return row;
  }
  throw std::invalid_argument("rotation lookup: unknown row key (" + std::to_string(key.x_bit) + ", " +
                              std::to_string(key.b_bit) + ", " + (key.fx_ge_fb ? "true" : "false") + ")");
}

Quadrant classify_quadrant(const Qubit& q) {
  if (std::abs(q.alpha()) <= kZeroTolerance) return Quadrant::AlphaZero;
  if (std::abs(q.beta()) <= kZeroTolerance) return Quadrant::BetaZero;
  return q.alpha() * q.beta() > 0.0 ? Quadrant::BothPositive : Quadrant::OppositeSigns;
}

LookupResult lookup(const LookupKey& key, const Qubit& q, const RotationPolicy& policy, double best_theta) {
  return lookup(key, classify_quadrant(q), q.theta(), policy, best_theta);
}

LookupResult lookup(const LookupKey& key, Quadrant quadrant, double theta, const RotationPolicy& policy,
                    double best_theta) {
  const LookupRow& row = find_row(key);
  const auto tc = static_cast<std::size_t>(policy.test_case);
  const SignToken token = row.sign[tc][static_cast<std::size_t>(quadrant)];
  LookupResult out;
  out.mcase = row.magnitude[tc];
  switch (token) {
    case Plus: out.sign = 1; break;
    case Minus: out.sign = -1; break;
    case Zero: out.sign = 0; break;
    case PlusMinus:
      out.sign = rotation_direction(theta, best_theta) == Direction::Negative ? -1 : 1;
      break;
  }
  return out;
}

Qubit rotate_gene(const Qubit& q, const LookupKey& key, const RotationPolicy& policy, std::size_t epoch,
                  std::size_t reps, double best_theta) {
  const LookupResult r = lookup(key, q, policy, best_theta);
  if (r.sign == 0 || r.mcase == None) return q;
  const double step = std::min(magnitude(policy, r.mcase, q.theta(), key.b_bit), annealed_cap(policy, epoch, reps));
  return apply_rotation(q, r.sign * step);
}

Qubit boost_best(const Qubit& q, std::uint8_t best_bit, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("boost_best: c must lie in [0, 1]");
  if (c == 1.0) return q;
  if (best_bit != 0) {
    const double alpha = c * q.alpha();
    return with_amplitudes(alpha, std::sqrt(1.0 - alpha * alpha));
  }
  const double beta = c * q.beta();
  return with_amplitudes(std::sqrt(1.0 - beta * beta), beta);
}

QuantumChromosome update_chromosome(const QuantumChromosome& chromosome, const BinaryChromosome& measured,
                                    bool fx_ge_fb, const RotationTarget& target, const RotationPolicy& policy,
                                    const BoostSettings& settings) {
  if (measured.size() != chromosome.length()) {
    throw std::invalid_argument("update_chromosome: measured bits do not match chromosome length");
  }
  std::vector<Qubit> out(chromosome.length());
  for (std::size_t g = 0; g < chromosome.length(); ++g) {
    const LookupKey key{measured[g], target.bit(g), fx_ge_fb};
    const Qubit rotated = rotate_gene(chromosome[g], key, policy, settings.epoch, settings.reps, target.theta(g));
    out[g] = boost_best(rotated, key.b_bit, settings.c);
  }
  return QuantumChromosome(std::move(out));
}

std::vector<QuantumChromosome> update_population(std::span<const QuantumChromosome> population,
                                                 const RotationTarget& target,
                                                 std::span<const BinaryChromosome> measured,
                                                 std::span<const std::uint8_t> fx_ge_fb,
                                                 const RotationPolicy& policy, const BoostSettings& settings) {
  return parallel::update_population(population, target, measured, fx_ge_fb, policy, settings);
}

std::string_view to_string(SignToken t) {
  switch (t) {
    case Plus: return "+";
    case Minus: return "-";
    case PlusMinus: return "+-";
    case Zero: return "0";
  }
  return "?";
}

std::string_view to_string(MagnitudeCase m) {
  switch (m) {
    case Case1: return "d1";
    case Case2: return "d2";
    case Case3: return "d3";
    case None: return "0";
  }
  return "?";
}

}  // namespace qiga
