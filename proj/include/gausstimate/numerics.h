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

#ifndef GAUSSTIMATE_NUMERICS_H_
#define GAUSSTIMATE_NUMERICS_H_

#include <cstdint>

#include "absl/status/statusor.h"

namespace gausstimate {

// SplitMix64 output finalizer. Bijective on 64-bit words.
uint64_t Mix64(uint64_t x);

// Purpose of a per-user stream. A user's private sample and the coins of its
// randomizer come from different streams so that re-running a protocol with a
// different randomizer does not perturb the data.
enum class StreamRole : uint64_t { kData = 0, kRandomizer = 1 };

// stream_id = Mix64(Mix64(trial_index) ^ (user_index * 2 + role)).
uint64_t DeriveStreamId(uint64_t trial_index, uint64_t user_index,
                        StreamRole role);

// Counter-based SplitMix64 stream. Construction is O(1), so one stream per
// user per trial is cheap. Equal (master_seed, stream_id) pairs produce
// bit-identical draws.
class RandomStream {
 public:
  RandomStream(uint64_t master_seed, uint64_t stream_id);

  uint64_t NextBits();
  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double NextUniform();

  uint64_t master_seed() const { return master_seed_; }
  uint64_t stream_id() const { return stream_id_; }

 private:
  uint64_t master_seed_;
  uint64_t stream_id_;
  uint64_t state_;
};

// Error function. Delegates to the C library (correctly rounded to ~1 ulp).
double Erf(double x);

// Inputs to ErfInv are clamped to [-kErfInvClamp, kErfInvClamp].
inline constexpr double kErfInvClamp = 1.0 - 0x1p-40;

// Inverse error function on (-1, 1). Arguments outside the clamp range
// (including +-1 and beyond, which debiased histograms can produce) saturate.
// Returns NaN for NaN input.
double ErfInv(double y);

// Box-Muller, using one cosine branch per call (two uniforms per draw).
absl::StatusOr<double> SampleGaussian(RandomStream& stream, double mu,
                                      double sigma);

// Inverse CDF of the zero-mean Laplace law with the given scale.
double LaplaceFromUniform(double u, double scale);

absl::StatusOr<double> SampleLaplace(RandomStream& stream, double scale);

// Euclidean (nonnegative) value of floor(x / 2^j) mod 4.
int FloorDivMod4(double x, int j);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_NUMERICS_H_
