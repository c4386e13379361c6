#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <tuple>
#include <sstream>

#include "qiga/kernels.hpp"
#include "qiga/rotation.hpp"
#include "test_support.hpp"

namespace qiga {
namespace {

using std::numbers::pi;
using testing::norm_error;
using testing::well_normalized;

RotationPolicy policy(TestCase tc) { return RotationPolicy::for_test_case(tc); }

TEST(RotationMatrix, ZeroIsIdentity) {
  const Mat2 m = rotation_matrix(0.0);
  EXPECT_EQ(m[0][0], 1.0);
  EXPECT_EQ(m[0][1], 0.0);
  EXPECT_EQ(m[1][0], 0.0);
  EXPECT_EQ(m[1][1], 1.0);
}

TEST(RotationMatrix, QuarterTurn) {
  const Mat2 m = rotation_matrix(pi / 2);
  EXPECT_NEAR(m[0][0] * 1.0 + m[0][1] * 0.0, 0.0, 1e-15);
  EXPECT_NEAR(m[1][0] * 1.0 + m[1][1] * 0.0, 1.0, 1e-15);
}

TEST(RotationMatrix, OrthogonalForRandomAngles) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(-10.0, 10.0);
    const Mat2 u = rotation_matrix(t);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        const double dot = u[0][r] * u[0][c] + u[1][r] * u[1][c];
        ASSERT_NEAR(dot, r == c ? 1.0 : 0.0, 1e-12);
      }
    }
    ASSERT_NEAR(u[0][0] * u[1][1] - u[0][1] * u[1][0], 1.0, 1e-12);
  }
}

TEST(ApplyRotation, ZeroDeltaUnchanged) {
  const Qubit q = Qubit::from_angle(0.7);
  EXPECT_EQ(apply_rotation(q, 0.0), q);
}

TEST(ApplyRotation, AngleAddition) {
  const Qubit q = apply_rotation(uniform_qubit(), 0.05 * pi);
  EXPECT_NEAR(q.theta(), pi / 4 + 0.05 * pi, 1e-12);
}

TEST(ApplyRotation, ClampsAtUpperPole) {
  const Qubit q = apply_rotation(Qubit::from_angle(kMaxTheta), 0.1);
  EXPECT_NEAR(q.theta(), kMaxTheta, 1e-12);
  EXPECT_LE(norm_error(q), 1e-12);
}

TEST(ApplyRotation, Composition) {
  Rng rng(2);
  int checked = 0;
  while (checked < 1000) {
    const double t = rng.uniform(0.2, 1.3);
    const double a = rng.uniform(-0.1, 0.1);
    const double b = rng.uniform(-0.1, 0.1);
    const Qubit q = Qubit::from_angle(t);
    const Qubit two = apply_rotation(apply_rotation(q, a), b);
    const Qubit one = apply_rotation(q, a + b);
    ASSERT_NEAR(two.alpha(), one.alpha(), 1e-9);
    ASSERT_NEAR(two.beta(), one.beta(), 1e-9);
    ASSERT_LE(norm_error(two), 1e-9);
    ++checked;
  }
}

TEST(RotationDirection, Cases) {
  EXPECT_EQ(rotation_direction(0.3, 0.3), Direction::Free);
  EXPECT_EQ(rotation_direction(0.1, 0.4), Direction::Negative);
  EXPECT_EQ(rotation_direction(0.1, 0.1 + 1.2 * pi), Direction::Positive);
  EXPECT_EQ(rotation_direction(0.1, 0.1 + pi), Direction::Free);  // sin(pi) == 0
}

TEST(RotationDirection, SwapWithinPiNeverPositive) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(0.0, pi);
    const double b = rng.uniform(0.0, pi);
    ASSERT_NE(rotation_direction(a, b), Direction::Positive);
    ASSERT_NE(rotation_direction(b, a), Direction::Positive);
  }
}

TEST(AnnealedCap, EndpointsExact) {
  const auto p = policy(TestCase::T3);
  EXPECT_EQ(annealed_cap(p, 0, 100), p.theta_max);
  EXPECT_EQ(annealed_cap(p, 100, 100), p.theta_min);
  EXPECT_EQ(annealed_cap(p, 7, 7), p.theta_min);
}

TEST(AnnealedCap, Midpoint) {
  const auto p = policy(TestCase::T3);
  EXPECT_NEAR(annealed_cap(p, 50, 100), 0.0405 * pi, 1e-15);
}

TEST(AnnealedCap, MonotoneAndBounded) {
  for (auto tc : {TestCase::T1, TestCase::T2, TestCase::T3}) {
    const auto p = policy(tc);
    for (std::size_t reps : {1u, 3u, 17u, 100u}) {
      double prev = annealed_cap(p, 0, reps);
      for (std::size_t e = 1; e <= reps; ++e) {
        const double cap = annealed_cap(p, e, reps);
        ASSERT_LE(cap, prev);
        ASSERT_GE(cap, p.theta_min);
        ASSERT_LE(cap, p.theta_max);
        prev = cap;
      }
    }
  }
}

TEST(AnnealedCap, Errors) {
  const auto p = policy(TestCase::T1);
  EXPECT_THROW(annealed_cap(p, 0, 0), std::invalid_argument);
  EXPECT_THROW(annealed_cap(p, 5, 4), std::invalid_argument);
}

TEST(Magnitude, Cases) {
  EXPECT_NEAR(magnitude(policy(TestCase::T1), MagnitudeCase::Case1, 0.3, 1), pi / 2 - 0.3, 1e-15);
  EXPECT_NEAR(magnitude(policy(TestCase::T1), MagnitudeCase::Case1, 0.3, 1), 1.2708, 1e-4);
  EXPECT_NEAR(magnitude(policy(TestCase::T2), MagnitudeCase::Case3, 0.3, 0), 6.0e-4, 1e-15);
  EXPECT_NEAR(magnitude(policy(TestCase::T1), MagnitudeCase::Case2, 0.4, 0), 0.4 / 20.0, 1e-15);
  for (auto m : {MagnitudeCase::Case1, MagnitudeCase::Case2, MagnitudeCase::Case3}) {
    EXPECT_NEAR(magnitude(policy(TestCase::T3), m, kMaxTheta, 1), 0.0, 1.1e-3);
  }
}

TEST(PolicyConstants, PerTestCase) {
  const double b[] = {20, 25, 30};
  const double c[] = {400, 500, 600};
  const double angle[] = {0.001, 0.05, 0.08};
  for (int i = 0; i < 3; ++i) {
    const auto p = policy(test_case_from_number(i + 1));
    EXPECT_EQ(p.const_a, 1.0);
    EXPECT_EQ(p.const_b, b[i]);
    EXPECT_EQ(p.const_c, c[i]);
    EXPECT_NEAR(p.theta_max, angle[i] * pi, 1e-15);
    EXPECT_NEAR(p.theta_min, 0.001 * pi, 1e-15);
  }
  EXPECT_THROW(test_case_from_number(4), std::invalid_argument);
}

TEST(Lookup, RowFourFirstTestCase) {
  const auto r = lookup({0, 1, true}, Qubit::from_angle(0.5), policy(TestCase::T1), 0.5);
  EXPECT_EQ(r.sign, -1);
  EXPECT_EQ(r.mcase, MagnitudeCase::Case2);
}

TEST(Lookup, RowOneNoRotation) {
  const auto r = lookup({0, 0, false}, Qubit::from_angle(0.5), policy(TestCase::T1), 0.5);
  EXPECT_EQ(r.sign, 0);
  EXPECT_EQ(r.mcase, MagnitudeCase::None);
}

TEST(Lookup, RowSixFirstTestCase) {
  const auto r = lookup({1, 0, true}, Qubit::from_angle(0.5), policy(TestCase::T1), 0.5);
  EXPECT_EQ(r.sign, 1);
  EXPECT_EQ(r.mcase, MagnitudeCase::Case3);
}

TEST(Lookup, PlusMinusResolvedByDirection) {
  // Row (0,0,F), T2, alpha = 0 column is '+-'.
  const auto p = policy(TestCase::T2);
  const double theta = 1.2;
  EXPECT_EQ(lookup({0, 0, false}, Quadrant::AlphaZero, theta, p, theta).sign, 1);         // Free -> +1
  EXPECT_EQ(lookup({0, 0, false}, Quadrant::AlphaZero, theta, p, theta + 0.2).sign, -1);   // |d| <= pi
  EXPECT_EQ(lookup({0, 0, false}, Quadrant::AlphaZero, 0.1, p, 0.1 + 3.5).sign, 1);        // |d| > pi
}

TEST(Lookup, ClampedPoleStaysInFirstQuadrantColumn) {
  EXPECT_EQ(classify_quadrant(with_amplitudes(0.0, 1.0)), Quadrant::BothPositive);
  EXPECT_EQ(classify_quadrant(with_amplitudes(1.0, 0.0)), Quadrant::BothPositive);
}

TEST(Lookup, TableHasEightUniqueRows) {
  const auto table = rotation_table();
  std::set<std::tuple<int, int, bool>> keys;
  for (const auto& row : table) keys.emplace(row.x_bit, row.b_bit, row.fx_ge_fb);
  EXPECT_EQ(keys.size(), 8u);
  EXPECT_THROW(find_row({2, 0, false}), std::invalid_argument);
}

SignToken parse_token(const std::string& s) {
  if (s == "+") return SignToken::Plus;
  if (s == "-") return SignToken::Minus;
  if (s == "+-") return SignToken::PlusMinus;
  if (s == "0") return SignToken::Zero;
  throw std::invalid_argument("bad token " + s);
}

MagnitudeCase parse_case(const std::string& s) {
  if (s == "case1") return MagnitudeCase::Case1;
  if (s == "case2") return MagnitudeCase::Case2;
  if (s == "case3") return MagnitudeCase::Case3;
  if (s == "none") return MagnitudeCase::None;
  throw std::invalid_argument("bad case " + s);
}

TEST(Lookup, DataFileMatchesCompiledTable) {
  std::ifstream in(std::string(QIGA_DATA_DIR) + "/rotation_table.tsv");
  ASSERT_TRUE(in) << "rotation_table.tsv not found";
  std::string line;
  int rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream ss(line);
    int x = 0;
    int b = 0;
    int f = 0;
    std::string tc;
    std::array<std::string, 4> cells;
    std::string delta;
    ss >> x >> b >> f >> tc >> cells[0] >> cells[1] >> cells[2] >> cells[3] >> delta;
    ASSERT_TRUE(ss) << line;
    const auto& row = find_row({static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(b), f != 0});
    const auto t = static_cast<std::size_t>(tc.at(1) - '1');
    for (std::size_t qd = 0; qd < 4; ++qd) EXPECT_EQ(row.sign[t][qd], parse_token(cells[qd])) << line;
    EXPECT_EQ(row.magnitude[t], parse_case(delta)) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 24);
}

TEST(RotateGene, ZeroSignUnchanged) {
  const Qubit q = Qubit::from_angle(0.4);
  EXPECT_EQ(rotate_gene(q, {0, 0, false}, policy(TestCase::T1), 0, 10, 0.4), q);
}

TEST(RotateGene, StepCappedByAnneal) {
  // Row (0,1,T) under T3: first-quadrant sign '-', Case1; raw step pi/2 - 0.3.
  const auto p = policy(TestCase::T3);
  const Qubit q = Qubit::from_angle(0.3);
  const Qubit r = rotate_gene(q, {0, 1, true}, p, 0, 100, 0.3);
  EXPECT_NEAR(std::abs(r.theta() - q.theta()), 0.08 * pi, 1e-12);
  EXPECT_NEAR(0.08 * pi, 0.2513, 1e-4);
}

TEST(RotateGene, FinalEpochBoundedByThetaMin) {
  const auto p = policy(TestCase::T3);
  Rng rng(4);
  for (const auto& row : rotation_table()) {
    const Qubit q = Qubit::from_angle(rng.uniform(0.2, 1.3));
    const Qubit r = rotate_gene(q, {row.x_bit, row.b_bit, row.fx_ge_fb}, p, 20, 20, q.theta());
    EXPECT_LE(std::abs(r.theta() - q.theta()), p.theta_min + 1e-12);
  }
}

TEST(BoostBest, UnitScaleUnchanged) {
  const Qubit q = new_qubit(0.6, 0.8);
  const Qubit r = boost_best(q, 1, 1.0);
  EXPECT_NEAR(r.alpha(), q.alpha(), 1e-15);
  EXPECT_NEAR(r.beta(), q.beta(), 1e-15);
}

TEST(BoostBest, HandTrace) {
  const Qubit r = boost_best(new_qubit(0.6, 0.8), 1, 0.5);
  EXPECT_NEAR(r.alpha(), 0.3, 1e-12);
  EXPECT_NEAR(r.beta(), std::sqrt(0.91), 1e-12);
  EXPECT_NEAR(r.beta(), 0.9539, 1e-4);
}

TEST(BoostBest, FullCollapseClamped) {
  const Qubit r = boost_best(new_qubit(0.6, 0.8), 0, 0.0);
  EXPECT_NEAR(r.theta(), kMinTheta, 1e-12);
  EXPECT_NEAR(r.alpha(), 1.0, 1e-6);
}

TEST(BoostBest, ExactNormalization) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Qubit q = Qubit::from_angle(rng.uniform(0.0, kHalfPi));
    const Qubit r = boost_best(q, static_cast<std::uint8_t>(rng.below(2)), rng.uniform01());
    ASSERT_LE(norm_error(r), 4e-16);
  }
}

TEST(BoostBest, RejectsScaleOutsideUnit) {
  EXPECT_THROW(boost_best(uniform_qubit(), 1, 1.5), std::invalid_argument);
  EXPECT_THROW(boost_best(uniform_qubit(), 1, -0.1), std::invalid_argument);
}

RotationTarget target_of(const BinaryChromosome& bits, const std::vector<double>& thetas) { return {bits, thetas}; }

TEST(UpdatePopulation, ClonesOfZeroBestDriftOnlyByBoost) {
  const BinaryChromosome best(std::vector<std::uint8_t>(6, 0));
  const QuantumChromosome clone(6);
  std::vector<QuantumChromosome> pop(4, clone);
  std::vector<BinaryChromosome> measured(4, best);
  std::vector<std::uint8_t> flags(4, 1);
  const auto p = policy(TestCase::T1);
  const auto out = update_population(pop, target_of(best, clone.angles()), measured, flags, p, {1, 10, 0.95});
  for (const auto& c : out) {
    for (std::size_t g = 0; g < 6; ++g) EXPECT_EQ(c[g], boost_best(clone[g], 0, 0.95));
  }
}

TEST(UpdatePopulation, IdentityWithUnitBoostAndZeroSigns) {
  const BinaryChromosome best(std::vector<std::uint8_t>(5, 0));
  std::vector<QuantumChromosome> pop{QuantumChromosome(5), QuantumChromosome(5)};
  std::vector<BinaryChromosome> measured(2, best);
  std::vector<std::uint8_t> flags(2, 0);
  const auto out = update_population(pop, target_of(best, pop[0].angles()), measured, flags,
                                     policy(TestCase::T1), {1, 10, 1.0});
  EXPECT_EQ(out, pop);
}

TEST(UpdatePopulation, ConvergesToFixedBest) {
  const BinaryChromosome best(std::vector<std::uint8_t>{1, 0, 1, 1, 0, 0, 1, 0});
  for (auto tc : {TestCase::T1, TestCase::T2, TestCase::T3}) {
    std::vector<QuantumChromosome> pop(3, QuantumChromosome(8));
    const std::vector<BinaryChromosome> measured(3, best);
    const std::vector<std::uint8_t> flags(3, 0);
    for (std::size_t e = 0; e < 200; ++e) {
      pop = update_population(pop, target_of(best, pop[0].angles()), measured, flags, policy(tc), {e, 200, 0.95});
      for (const auto& c : pop) ASSERT_TRUE(well_normalized(c));
    }
    for (const auto& c : pop) {
      for (std::size_t g = 0; g < 8; ++g) {
        const double p_best = best[g] ? c[g].prob_one() : 1.0 - c[g].prob_one();
        EXPECT_GE(p_best, 0.99) << "gene " << g;
      }
    }
  }
}

// Sign of the first-quadrant cell relative to the best bit: +1 when it rotates
// towards b, -1 when away, 0 for no rotation.
int pull_towards_best(const LookupRow& row, TestCase tc) {
  const auto tok = row.sign[static_cast<std::size_t>(tc)][static_cast<std::size_t>(Quadrant::BothPositive)];
  if (tok == SignToken::Zero || row.magnitude[static_cast<std::size_t>(tc)] == MagnitudeCase::None) return 0;
  const int sign = tok == SignToken::Plus ? 1 : -1;
  return row.b_bit ? sign : -sign;
}

TEST(UpdatePopulation, BestBitProbabilityNonDecreasing) {
  Rng rng(6);
  for (auto tc : {TestCase::T1, TestCase::T2, TestCase::T3}) {
    for (const auto& row : rotation_table()) {
      if (row.fx_ge_fb || pull_towards_best(row, tc) < 0) continue;
      const BinaryChromosome measured(std::vector<std::uint8_t>{row.x_bit});
      const BinaryChromosome best(std::vector<std::uint8_t>{row.b_bit});
      for (int start = 0; start < 20; ++start) {
        QuantumChromosome c(std::vector<Qubit>{Qubit::from_angle(rng.uniform(0.1, 1.4))});
        auto p_best = [&](const QuantumChromosome& ch) {
          return row.b_bit ? ch[0].prob_one() : 1 - ch[0].prob_one();
        };
        for (std::size_t e = 0; e < 100; ++e) {
          const double before = p_best(c);
          c = update_chromosome(c, measured, false, target_of(best, c.angles()), policy(tc), {e, 100, 0.95});
          ASSERT_GE(p_best(c), before - 1e-12)
              << "T" << test_case_number(tc) << " row (" << int(row.x_bit) << "," << int(row.b_bit) << ")";
        }
      }
    }
  }
}

TEST(UpdatePopulation, OnlyTwoLosingRowsPullAwayFromBest) {
  std::vector<std::tuple<int, int, int>> away;
  for (auto tc : {TestCase::T1, TestCase::T2, TestCase::T3}) {
    for (const auto& row : rotation_table()) {
      if (!row.fx_ge_fb && pull_towards_best(row, tc) < 0) {
        away.emplace_back(test_case_number(tc), row.x_bit, row.b_bit);
      }
    }
  }
  const std::vector<std::tuple<int, int, int>> expected{{2, 0, 1}, {2, 1, 0}};
  EXPECT_EQ(away, expected);
}

TEST(UpdatePopulation, LengthMismatchThrows) {
  const BinaryChromosome best(std::vector<std::uint8_t>(3, 0));
  std::vector<QuantumChromosome> pop(2, QuantumChromosome(3));
  std::vector<BinaryChromosome> measured(1, best);
  std::vector<std::uint8_t> flags(2, 0);
  EXPECT_THROW(update_population(pop, target_of(best, {}), measured, flags, policy(TestCase::T1), {}),
               std::invalid_argument);
}

}  // namespace
}  // namespace qiga
