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

#include "gausstimate/numerics.h"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace gausstimate {
namespace {

constexpr uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Giles' single-precision erfinv approximation (relative error ~1e-7).
double ErfInvInitialGuess(double y) {
  double w = -std::log((1.0 - y) * (1.0 + y));
  double p;
  if (w < 5.0) {
    w -= 2.5;
    p = 2.81022636e-08;
    p = 3.43273939e-07 + p * w;
    p = -3.5233877e-06 + p * w;
    p = -4.39150654e-06 + p * w;
    p = 0.00021858087 + p * w;
    p = -0.00125372503 + p * w;
    p = -0.00417768164 + p * w;
    p = 0.246640727 + p * w;
    p = 1.50140941 + p * w;
  } else {
    w = std::sqrt(w) - 3.0;
    p = -0.000200214257;
    p = 0.000100950558 + p * w;
    p = 0.00134934322 + p * w;
    p = -0.00367342844 + p * w;
    p = 0.00573950773 + p * w;
    p = -0.0076224613 + p * w;
    p = 0.00943887047 + p * w;
    p = 1.00167406 + p * w;
    p = 2.83297682 + p * w;
  }
  return p * y;
}

}  // namespace

uint64_t Mix64(uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t DeriveStreamId(uint64_t trial_index, uint64_t user_index,
                        StreamRole role) {
  return Mix64(Mix64(trial_index) ^
               (user_index * 2 + static_cast<uint64_t>(role)));
}

RandomStream::RandomStream(uint64_t master_seed, uint64_t stream_id)
    : master_seed_(master_seed),
      stream_id_(stream_id),
      state_(Mix64(master_seed ^ Mix64(stream_id + kGoldenGamma))) {}

uint64_t RandomStream::NextBits() {
  state_ += kGoldenGamma;
  return Mix64(state_);
}

double RandomStream::NextUniform() {
  // 53 random bits centred in their cell: (m + 0.5) / 2^53.
  return (static_cast<double>(NextBits() >> 11) + 0.5) * 0x1p-53;
}

double Erf(double x) { return std::erf(x); }

double ErfInv(double y) {
  if (std::isnan(y)) return y;
  if (y == 0.0) return 0.0;
  const bool negative = y < 0.0;
  double a = std::fabs(y);
  if (a > kErfInvClamp) a = kErfInvClamp;

  double x = ErfInvInitialGuess(a);
  // Newton on erf for the bulk, on erfc for the tail where erf(x) - a cancels.
  const double derivative_scale = 2.0 / std::sqrt(std::numbers::pi);
  const bool tail = a > 0.5;
  const double complement = 1.0 - a;  // exact for a in [0.5, 1]
  for (int step = 0; step < 2; ++step) {
    const double slope = derivative_scale * std::exp(-x * x);
    if (tail) {
      x += (std::erfc(x) - complement) / slope;
    } else {
      x -= (std::erf(x) - a) / slope;
    }
  }
  return negative ? -x : x;
}

absl::StatusOr<double> SampleGaussian(RandomStream& stream, double mu,
                                      double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive and finite, got ", sigma));
  }
  const double u1 = stream.NextUniform();
  const double u2 = stream.NextUniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * std::numbers::pi * u2);
  return mu + sigma * z;
}

double LaplaceFromUniform(double u, double scale) {
  if (u <= 0.5) return scale * std::log(2.0 * u);
  return -scale * std::log(2.0 * (1.0 - u));
}

absl::StatusOr<double> SampleLaplace(RandomStream& stream, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Laplace scale must be positive and finite, got ", scale));
  }
  return LaplaceFromUniform(stream.NextUniform(), scale);
}

int FloorDivMod4(double x, int j) {
  // ldexp is exact, so the quotient is the correctly rounded x / 2^j.
  const double q = std::floor(std::ldexp(x, -j));
  double r = std::fmod(q, 4.0);
  if (r < 0.0) r += 4.0;
  return static_cast<int>(r);
}

}  // namespace gausstimate
