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

#include "gausstimate/aggregation.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "gausstimate/numerics.h"
#include "gausstimate/randomizers.h"
#include "gtest/gtest.h"

namespace gausstimate {
namespace {

// Builds k quad reports at `level` with the given per-value counts.
std::vector<QuadReport> QuadReports(int level, std::array<int, 4> counts) {
  std::vector<QuadReport> reports;
  for (int a = 0; a < 4; ++a) {
    for (int i = 0; i < counts[a]; ++i) {
      reports.push_back({static_cast<UserId>(reports.size()), level, a});
    }
  }
  return reports;
}

std::vector<SignReport> SignReports(int plus, int minus) {
  std::vector<SignReport> reports;
  for (int i = 0; i < plus; ++i) reports.push_back({i, std::nullopt, 1});
  for (int i = 0; i < minus; ++i) reports.push_back({plus + i, std::nullopt, -1});
  return reports;
}

TEST(KvAgg1Test, WorkedExample) {
  // (e^eps + 3) / (e^eps - 1) = 3 and k / (e^eps + 3) = 1 at eps = ln 3.
  auto hists = KvAgg1(std::log(3.0), 6, {0, 0}, QuadReports(0, {6, 0, 0, 0}));
  ASSERT_TRUE(hists.ok());
  const QuadHistogram& h = hists->at(0);
  EXPECT_NEAR(h.bins[0], 15.0, 1e-12);
  for (int a = 1; a < 4; ++a) EXPECT_NEAR(h.bins[a], -3.0, 1e-12);
  EXPECT_EQ(h.k, 6);
}

TEST(KvAgg1Test, UniformProfileIsFixedPoint) {
  // k = 4 (e^eps + 3) with integer e^eps.
  for (double e : {3.0, 5.0}) {
    const int k = static_cast<int>(4 * (e + 3));
    const int c = k / 4;
    auto hists = KvAgg1(std::log(e), k, {2, 2}, QuadReports(2, {c, c, c, c}));
    ASSERT_TRUE(hists.ok());
    for (double b : hists->at(2).bins) EXPECT_NEAR(b, c, 1e-12);
  }
}

TEST(KvAgg1Test, RejectsMalformedInput) {
  const double eps = 1.0;
  // Wrong count at one level.
  EXPECT_FALSE(KvAgg1(eps, 5, {0, 0}, QuadReports(0, {1, 1, 1, 1})).ok());
  // Level missing entirely.
  EXPECT_FALSE(KvAgg1(eps, 4, {0, 1}, QuadReports(0, {1, 1, 1, 1})).ok());
  // Level outside the range.
  EXPECT_FALSE(KvAgg1(eps, 4, {1, 1}, QuadReports(0, {1, 1, 1, 1})).ok());
  // Value outside {0,1,2,3}.
  std::vector<QuadReport> bad = QuadReports(0, {1, 1, 1, 0});
  bad.push_back({9, 0, 4});
  EXPECT_FALSE(KvAgg1(eps, 4, {0, 0}, bad).ok());
}

// Random counts summing to k: the bins always sum to k.
TEST(KvAgg1Test, SumIdentity) {
  RandomStream s(1, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 1 + static_cast<int>(s.NextBits() % 500);
    std::array<int, 4> counts{};
    for (int i = 0; i < k; ++i) ++counts[s.NextBits() % 4];
    const double eps = 0.05 + 3.0 * s.NextUniform();
    auto hists = KvAgg1(eps, k, {-1, -1}, QuadReports(-1, counts));
    ASSERT_TRUE(hists.ok());
    const auto& b = hists->at(-1).bins;
    ASSERT_NEAR(b[0] + b[1] + b[2] + b[3], k, 1e-9 * k);
    auto paired = Agg1(eps, k, {-1, -1}, QuadReports(-1, counts));
    ASSERT_TRUE(paired.ok());
    const auto& p = paired->at(-1).bins;
    ASSERT_NEAR(p[0] + p[1] + p[2] + p[3], 2.0 * k, 2e-9 * k);
  }
}

TEST(Agg1Test, PairsAdjacentBins) {
  QuadHistogram q{3, {1.0, 2.0, 4.0, 8.0}, 15};
  PairedHistogram p = PairAdjacent(q);
  EXPECT_EQ(p.level, 3);
  EXPECT_EQ(p.bins[0], 3.0);
  EXPECT_EQ(p.bins[1], 6.0);
  EXPECT_EQ(p.bins[2], 12.0);
  EXPECT_EQ(p.bins[3], 9.0);
  PairedHistogram u = PairAdjacent({0, {2.5, 2.5, 2.5, 2.5}, 10});
  for (double b : u.bins) EXPECT_EQ(b, 5.0);
}

TEST(KvAgg2Test, WorkedExample) {
  // (e^eps + 1) / (e^eps - 1) = 2 and k / (e^eps + 1) = 1 at eps = ln 3.
  auto h = KvAgg2(std::log(3.0), 4, SignReports(4, 0));
  ASSERT_TRUE(h.ok());
  EXPECT_NEAR(h->plus, 6.0, 1e-12);
  EXPECT_NEAR(h->minus, -2.0, 1e-12);
}

TEST(KvAgg2Test, BalancedAndSum) {
  auto h = KvAgg2(0.7, 10, SignReports(5, 5));
  ASSERT_TRUE(h.ok());
  EXPECT_NEAR(h->plus, 5.0, 1e-12);
  EXPECT_NEAR(h->minus, 5.0, 1e-12);
  RandomStream s(2, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 1 + static_cast<int>(s.NextBits() % 300);
    const int plus = static_cast<int>(s.NextBits() % (k + 1));
    auto g = KvAgg2(0.05 + 3.0 * s.NextUniform(), k, SignReports(plus, k - plus));
    ASSERT_TRUE(g.ok());
    ASSERT_NEAR(g->plus + g->minus, k, 1e-9 * k);
  }
}

TEST(KvAgg2Test, RejectsMalformedInput) {
  EXPECT_FALSE(KvAgg2(1.0, 5, SignReports(2, 2)).ok());
  std::vector<SignReport> bad = SignReports(1, 0);
  bad[0].value = 0;
  EXPECT_FALSE(KvAgg2(1.0, 1, bad).ok());
}

TEST(DebiasTest, InfiniteEpsilonIsIdentity) {
  EXPECT_EQ(DebiasCount(std::numeric_limits<double>::infinity(), 4, 7.0, 20),
            7.0);
}

// Fixed private values with known true histogram at level 0.
std::vector<double> ValuesWithHistogram(std::array<int, 4> h) {
  std::vector<double> xs;
  for (int a = 0; a < 4; ++a) {
    for (int i = 0; i < h[a]; ++i) xs.push_back(a + 0.5);
  }
  return xs;
}

TEST(KvAgg1Test, UnbiasedOverRandomization) {
  const std::array<int, 4> truth = {400, 300, 200, 100};
  const std::vector<double> xs = ValuesWithHistogram(truth);
  const int k = 1000;
  const int trials = 2000;
  std::array<double, 4> sum{}, sq{};
  RandomStream s(3, 1);
  for (int t = 0; t < trials; ++t) {
    std::vector<QuadReport> reports;
    for (int i = 0; i < k; ++i) {
      reports.push_back(*Rr1(s, 1.0, PrivateValue(xs[i]), 0, i));
    }
    const auto h = KvAgg1(1.0, k, {0, 0}, reports)->at(0).bins;
    for (int a = 0; a < 4; ++a) {
      sum[a] += h[a];
      sq[a] += h[a] * h[a];
    }
  }
  for (int a = 0; a < 4; ++a) {
    const double mean = sum[a] / trials;
    const double var = sq[a] / trials - mean * mean;
    EXPECT_NEAR(mean, truth[a], 4.0 * std::sqrt(var / trials)) << a;
  }
}

TEST(KvAgg1Test, ConcentrationBound) {
  const std::array<int, 4> truth = {700, 100, 100, 100};
  const std::vector<double> xs = ValuesWithHistogram(truth);
  const int k = 1000;
  const double eps = 1.0, beta = 0.05, L = 10;
  const double psi = ((eps + 4) / (eps * std::sqrt(2.0))) *
                     std::sqrt(k * std::log(8 * L / beta));
  RandomStream s(4, 1);
  int within = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<QuadReport> reports;
    for (int i = 0; i < k; ++i) {
      reports.push_back(*Rr1(s, eps, PrivateValue(xs[i]), 0, i));
    }
    const auto h = KvAgg1(eps, k, {0, 0}, reports)->at(0).bins;
    double worst = 0.0;
    for (int a = 0; a < 4; ++a) worst = std::max(worst, std::fabs(h[a] - truth[a]));
    within += worst <= psi;
  }
  EXPECT_GE(within, (1.0 - beta) * trials);
}

}  // namespace
}  // namespace gausstimate
