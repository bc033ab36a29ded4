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

// User-side (epsilon, 0)-local randomizers. Each consumes one private sample
// plus public parameters and emits exactly one report. This is the only code
// that can read a PrivateValue.

#ifndef GAUSSTIMATE_RANDOMIZERS_H_
#define GAUSSTIMATE_RANDOMIZERS_H_

#include <array>
#include <cstdint>
#include <optional>

#include "absl/status/statusor.h"
#include "gausstimate/numerics.h"

namespace gausstimate {

using UserId = int64_t;

// A user's raw sample. Opaque everywhere except inside the randomizers.
class PrivateValue {
 public:
  explicit PrivateValue(double value) : value_(value) {}

 private:
  friend class RandomizerAccess;
  double value_;
};

// {offset + b * spacing : b integer}.
struct LatticeSpec {
  double offset = 0.0;
  double spacing = 1.0;

  // Closest lattice point; a point exactly midway goes to the lower one.
  double Nearest(double x) const;
};

struct QuadReport {
  UserId user_id = 0;
  int level = 0;
  int value = 0;  // {0,1,2,3}
};

struct SignReport {
  UserId user_id = 0;
  std::optional<int> subgroup;
  int value = 1;  // {-1,+1}
};

// Index of a one-round unknown-variance subgroup: level j_a and the offset
// multiplier in {1, ..., rho}.
struct LevelOffset {
  int level = 0;
  int offset_index = 0;
  friend bool operator==(const LevelOffset&, const LevelOffset&) = default;
};

struct RealReport {
  UserId user_id = 0;
  std::optional<LevelOffset> subgroup;
  double value = 0.0;
};

// Probability that a randomized response over `num_outcomes` values reports the
// truth: e^eps / (e^eps + num_outcomes - 1). eps = +inf gives 1.
double TruthfulProbability(double eps, int num_outcomes);
// Probability of each specific untruthful value: 1 / (e^eps + num_outcomes - 1).
double OtherOutcomeProbability(double eps, int num_outcomes);

// sgn with sgn(0) = +1.
inline int SignOf(double x) { return x < 0.0 ? -1 : 1; }

// Randomized response on floor(x / 2^level) mod 4.
absl::StatusOr<QuadReport> Rr1(RandomStream& stream, double eps,
                               const PrivateValue& x, int level, UserId user);

// Randomized response on sgn((x - center) / sigma).
absl::StatusOr<SignReport> KvRr2(RandomStream& stream, double eps,
                                 const PrivateValue& x, double center,
                                 double sigma, UserId user);

// As KvRr2, centred at the lattice point nearest x.
absl::StatusOr<SignReport> OneRoundKvRr2(RandomStream& stream, double eps,
                                         const PrivateValue& x,
                                         const LatticeSpec& lattice,
                                         double sigma, UserId user,
                                         int subgroup);

// clamp(x, lo, hi) + Laplace((hi - lo) / eps).
absl::StatusOr<RealReport> UvRr2(RandomStream& stream, double eps,
                                 const PrivateValue& x, double interval_lo,
                                 double interval_hi, UserId user);

// (x - nearest lattice point) + Laplace(noise_scale_numerator / eps).
absl::StatusOr<RealReport> OneRoundUvRr2(RandomStream& stream, double eps,
                                         const PrivateValue& x,
                                         const LatticeSpec& lattice,
                                         double noise_scale_numerator,
                                         UserId user, LevelOffset subgroup);

// Exact output laws, used by the privacy audits. These take the hypothetical
// input in the clear.
std::array<double, 4> Rr1OutputLaw(double eps, double x, int level);
// Index 0 is P[report = -1], index 1 is P[report = +1].
std::array<double, 2> SignOutputLaw(double eps, double x, double center);
std::array<double, 2> OneRoundKvOutputLaw(double eps, double x,
                                          const LatticeSpec& lattice);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_RANDOMIZERS_H_
