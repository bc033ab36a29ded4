//
// Copyright 2026 The Gausstimate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "gausstimate/randomizers.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "gausstimate/numerics.h"
#include "gtest/gtest.h"

namespace gausstimate {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest point of {offset + b * spacing} by scanning b, ties to the lower.
double ScanNearest(double offset, double spacing, double x, int b_range) {
  double best = offset - b_range * spacing;
  for (int b = -b_range; b <= b_range; ++b) {
    const double p = offset + b * spacing;
    if (std::fabs(p - x) < std::fabs(best - x)) best = p;
  }
  return best;
}

TEST(ProbabilityTest, ClosedForms) {
  EXPECT_NEAR(TruthfulProbability(std::log(3.0), 4), 0.5, 1e-15);
  EXPECT_NEAR(OtherOutcomeProbability(std::log(3.0), 4), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(TruthfulProbability(std::log(3.0), 2), 0.75, 1e-15);
  // e / (e + 3), evaluated to 50 digits.
  EXPECT_NEAR(TruthfulProbability(1.0, 4), 0.4753668864186717, 1e-15);
  EXPECT_EQ(TruthfulProbability(kInf, 4), 1.0);
  EXPECT_EQ(OtherOutcomeProbability(kInf, 2), 0.0);
}

TEST(Rr1Test, RejectsBadEpsilon) {
  RandomStream s(1, 1);
  EXPECT_FALSE(Rr1(s, 0.0, PrivateValue(1.0), 0, 0).ok());
  EXPECT_FALSE(Rr1(s, -1.0, PrivateValue(1.0), 0, 0).ok());
}

TEST(Rr1Test, LargeEpsilonIsTruthful) {
  RandomStream s(2, 1);
  for (int i = 0; i < 100000; ++i) {
    const double x = (s.NextUniform() - 0.5) * 200.0;
    absl::StatusOr<QuadReport> r = Rr1(s, 50.0, PrivateValue(x), 1, i);
    ASSERT_TRUE(r.ok());
    ASSERT_EQ(r->value, FloorDivMod4(x, 1));
    ASSERT_EQ(r->level, 1);
    ASSERT_EQ(r->user_id, i);
  }
}

TEST(Rr1Test, TruthfulFrequency) {
  RandomStream s(3, 1);
  const int n = 1000000;
  int hits = 0;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) {
    const int v = Rr1(s, 1.0, PrivateValue(5.0), 0, 0)->value;
    ++counts[v];
    hits += v == 1;
  }
  const double p = std::exp(1.0) / (std::exp(1.0) + 3.0);
  const double se = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(static_cast<double>(hits) / n, p, 3.0 * se);
  // Untruthful values are uniform over the other three.
  const double q = (1.0 - p) / 3.0;
  const double se_q = std::sqrt(q * (1 - q) / n);
  for (int a : {0, 2, 3}) {
    EXPECT_NEAR(static_cast<double>(counts[a]) / n, q, 4.0 * se_q) << a;
  }
}

TEST(Rr1Test, LawMatchesDefinition) {
  const std::array<double, 4> law = Rr1OutputLaw(std::log(3.0), 5.0, 0);
  EXPECT_NEAR(law[1], 0.5, 1e-15);
  for (int a : {0, 2, 3}) EXPECT_NEAR(law[a], 1.0 / 6.0, 1e-15);
}

TEST(KvRr2Test, RejectsBadParameters) {
  RandomStream s(1, 1);
  EXPECT_FALSE(KvRr2(s, 0.0, PrivateValue(1.0), 0.0, 1.0, 0).ok());
  EXPECT_FALSE(KvRr2(s, 1.0, PrivateValue(1.0), 0.0, 0.0, 0).ok());
  EXPECT_FALSE(KvRr2(s, 1.0, PrivateValue(1.0), 0.0, -2.0, 0).ok());
}

TEST(KvRr2Test, SignOfZeroIsPlus) {
  RandomStream s(4, 1);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(KvRr2(s, kInf, PrivateValue(2.5), 2.5, 1.0, 0)->value, 1);
  }
  const std::array<double, 2> law = SignOutputLaw(1.0, 2.5, 2.5);
  EXPECT_NEAR(law[1], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
}

TEST(KvRr2Test, MeanReport) {
  RandomStream s(5, 1);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += KvRr2(s, 1.0, PrivateValue(3.0), 1.0, 2.0, 0)->value;
  }
  // (e - 1) / (e + 1), evaluated to 50 digits.
  const double m = 0.46211715726000974;
  EXPECT_NEAR(sum / n, m, 3.0 * std::sqrt((1 - m * m) / n));
}

TEST(KvRr2Test, TruthfulProbabilityAtLnThree) {
  RandomStream s(6, 1);
  const int n = 200000;
  int truthful = 0;
  for (int i = 0; i < n; ++i) {
    truthful += KvRr2(s, std::log(3.0), PrivateValue(-1.0), 0.0, 1.0, 0)
                    ->value == -1;
  }
  EXPECT_NEAR(static_cast<double>(truthful) / n, 0.75,
              4.0 * std::sqrt(0.75 * 0.25 / n));
}

TEST(LatticeTest, NearestMatchesScan) {
  RandomStream s(7, 1);
  for (int i = 0; i < 20000; ++i) {
    const double offset = (s.NextUniform() - 0.5) * 20.0;
    const double spacing = 0.5 + s.NextUniform() * 10.0;
    const double x = (s.NextUniform() - 0.5) * 100.0;
    const LatticeSpec lattice{offset, spacing};
    // Lattice points may be formed with different roundings.
    ASSERT_NEAR(lattice.Nearest(x), ScanNearest(offset, spacing, x, 200),
                1e-9)
        << offset << " " << spacing << " " << x;
  }
}

TEST(LatticeTest, TiesGoToLowerPoint) {
  EXPECT_EQ((LatticeSpec{0.0, 10.0}).Nearest(5.0), 0.0);
  EXPECT_EQ((LatticeSpec{2.0, 4.0}).Nearest(4.0), 2.0);
  EXPECT_EQ((LatticeSpec{0.0, 10.0}).Nearest(-5.0), -10.0);
}

TEST(OneRoundKvRr2Test, Examples) {
  RandomStream s(8, 1);
  // Midway: centre at the lower point, x - centre > 0.
  EXPECT_EQ(OneRoundKvRr2(s, kInf, PrivateValue(5.0), {0.0, 10.0}, 1.0, 0, 3)
                ->value,
            1);
  EXPECT_EQ(OneRoundKvRr2(s, kInf, PrivateValue(3.0), {0.0, 10.0}, 1.0, 0, 3)
                ->value,
            1);
  // |8.5 - 2| = 6.5 > |8.5 - 12| = 3.5, so the centre is 12.
  EXPECT_EQ(ScanNearest(2.0, 10.0, 8.5, 10), 12.0);
  absl::StatusOr<SignReport> r =
      OneRoundKvRr2(s, kInf, PrivateValue(8.5), {2.0, 10.0}, 1.0, 9, 3);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->value, -1);
  EXPECT_EQ(r->subgroup, 3);
  EXPECT_EQ(r->user_id, 9);
}

TEST(OneRoundKvRr2Test, RejectsBadLattice) {
  RandomStream s(1, 1);
  EXPECT_FALSE(
      OneRoundKvRr2(s, 1.0, PrivateValue(1.0), {0.0, 0.0}, 1.0, 0, 0).ok());
}

TEST(UvRr2Test, NoiselessClamping) {
  RandomStream s(9, 1);
  EXPECT_EQ(UvRr2(s, kInf, PrivateValue(0.3), -1.0, 2.0, 0)->value, 0.3);
  EXPECT_EQ(UvRr2(s, kInf, PrivateValue(102.0), -1.0, 2.0, 0)->value, 2.0);
  EXPECT_EQ(UvRr2(s, kInf, PrivateValue(-50.0), -1.0, 2.0, 0)->value, -1.0);
}

TEST(UvRr2Test, RejectsBadInterval) {
  RandomStream s(1, 1);
  EXPECT_FALSE(UvRr2(s, 1.0, PrivateValue(0.0), 1.0, 1.0, 0).ok());
  EXPECT_FALSE(UvRr2(s, 1.0, PrivateValue(0.0), 2.0, 1.0, 0).ok());
  EXPECT_FALSE(UvRr2(s, 0.0, PrivateValue(0.0), 0.0, 1.0, 0).ok());
}

TEST(UvRr2Test, NoiseVariance) {
  RandomStream s(10, 1);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = UvRr2(s, 1.0, PrivateValue(0.5), 0.0, 1.0, 0)->value - 0.5;
    sum += d;
    sq += d * d;
  }
  const double mean = sum / n;
  EXPECT_NEAR(sq / n - mean * mean, 2.0, 0.03 * 2.0);
}

TEST(OneRoundUvRr2Test, NoiselessResidual) {
  RandomStream s(11, 1);
  const LevelOffset g{2, 1};
  EXPECT_EQ(
      OneRoundUvRr2(s, kInf, PrivateValue(20.0), {0.0, 10.0}, 1.0, 0, g)->value,
      0.0);
  EXPECT_EQ(
      OneRoundUvRr2(s, kInf, PrivateValue(7.0), {0.0, 10.0}, 1.0, 0, g)->value,
      -3.0);
  absl::StatusOr<RealReport> r =
      OneRoundUvRr2(s, kInf, PrivateValue(7.0), {0.0, 10.0}, 1.0, 4, g);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->subgroup, g);
}

TEST(OneRoundUvRr2Test, ResidualWithinHalfSpacing) {
  RandomStream s(12, 1);
  for (int i = 0; i < 100000; ++i) {
    const double x = (s.NextUniform() - 0.5) * 1000.0;
    const double v =
        OneRoundUvRr2(s, kInf, PrivateValue(x), {1.5, 6.0}, 1.0, 0, {0, 1})
            ->value;
    ASSERT_LE(std::fabs(v), 3.0) << x;
  }
}

TEST(OneRoundUvRr2Test, RejectsBadScale) {
  RandomStream s(1, 1);
  EXPECT_FALSE(
      OneRoundUvRr2(s, 1.0, PrivateValue(1.0), {0.0, 1.0}, 0.0, 0, {0, 1})
          .ok());
}

// For every pair of inputs and every output, the law ratio is at most e^eps
// and reaches it for some pair.
TEST(OutputLawTest, DiscreteRatiosAreTight) {
  RandomStream s(13, 1);
  for (double eps : {0.1, 0.5, 1.0, 2.0, std::log(3.0)}) {
    double worst_rr1 = 0.0, worst_sign = 0.0, worst_lattice = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double x = (s.NextUniform() - 0.5) * 40.0;
      const double y = (s.NextUniform() - 0.5) * 40.0;
      const int level = static_cast<int>(s.NextBits() % 5) - 2;
      const auto a = Rr1OutputLaw(eps, x, level);
      const auto b = Rr1OutputLaw(eps, y, level);
      const auto c = SignOutputLaw(eps, x, 0.7);
      const auto d = SignOutputLaw(eps, y, 0.7);
      const auto e = OneRoundKvOutputLaw(eps, x, {1.0, 3.0});
      const auto f = OneRoundKvOutputLaw(eps, y, {1.0, 3.0});
      for (int o = 0; o < 4; ++o) worst_rr1 = std::max(worst_rr1, a[o] / b[o]);
      for (int o = 0; o < 2; ++o) {
        worst_sign = std::max(worst_sign, c[o] / d[o]);
        worst_lattice = std::max(worst_lattice, e[o] / f[o]);
      }
    }
    for (double worst : {worst_rr1, worst_sign, worst_lattice}) {
      EXPECT_LE(worst, std::exp(eps) * (1 + 1e-12)) << eps;
      EXPECT_NEAR(worst, std::exp(eps), 1e-9 * std::exp(eps)) << eps;
    }
  }
}

}  // namespace
}  // namespace gausstimate
