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

// Analyst-side debiasing of randomized-response counts into unbiased
// histogram estimates. Bins are real-valued and may be negative.

#ifndef GAUSSTIMATE_AGGREGATION_H_
#define GAUSSTIMATE_AGGREGATION_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>

#include "absl/status/statusor.h"
#include "gausstimate/randomizers.h"

namespace gausstimate {

// Contiguous level range [min, max].
struct LevelRange {
  int min = 0;
  int max = 0;

  int size() const { return max - min + 1; }
  bool contains(int j) const { return j >= min && j <= max; }
};

struct QuadHistogram {
  int level = 0;
  std::array<double, 4> bins{};
  int64_t k = 0;
};

// bins[a] = quad[a] + quad[(a + 1) mod 4].
struct PairedHistogram {
  int level = 0;
  std::array<double, 4> bins{};
  int64_t k = 0;
};

struct SignHistogram {
  double minus = 0.0;  // H(-1)
  double plus = 0.0;   // H(+1)
  int64_t k = 0;
};

// Debias map for m-ary randomized response:
// ((e^eps + m - 1) / (e^eps - 1)) * (count - k / (e^eps + m - 1)).
// eps = +inf is the identity.
double DebiasCount(double eps, int num_outcomes, double count, int64_t k);

// Every level in `levels` must have exactly k reports, and no report may name
// a level outside the range.
absl::StatusOr<std::map<int, QuadHistogram>> KvAgg1(
    double eps, int64_t k, LevelRange levels,
    std::span<const QuadReport> reports);

absl::StatusOr<std::map<int, PairedHistogram>> Agg1(
    double eps, int64_t k, LevelRange levels,
    std::span<const QuadReport> reports);

PairedHistogram PairAdjacent(const QuadHistogram& quad);

absl::StatusOr<SignHistogram> KvAgg2(double eps, int64_t k,
                                     std::span<const SignReport> reports);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_AGGREGATION_H_
