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

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "gausstimate/numerics.h"

namespace gausstimate {

class RandomizerAccess {
 public:
  static double Read(const PrivateValue& x) { return x.value_; }
};

namespace {

absl::Status ValidateEpsilon(double eps) {
  if (!(eps > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive, got ", eps));
  }
  return absl::OkStatus();
}

absl::Status ValidateSigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive and finite, got ", sigma));
  }
  return absl::OkStatus();
}

absl::Status ValidateLattice(const LatticeSpec& lattice) {
  if (!(lattice.spacing > 0.0) || !std::isfinite(lattice.spacing) ||
      !std::isfinite(lattice.offset)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "lattice spacing must be positive and finite, got ", lattice.spacing));
  }
  return absl::OkStatus();
}

int RespondSign(RandomStream& stream, double eps, int truth) {
  const double c = stream.NextUniform();
  return c <= TruthfulProbability(eps, 2) ? truth : -truth;
}

// Adds Laplace(scale_numerator / eps); eps = +inf means no noise.
absl::StatusOr<double> AddLaplace(RandomStream& stream, double eps,
                                  double value, double scale_numerator) {
  if (std::isinf(eps)) return value;
  absl::StatusOr<double> noise = SampleLaplace(stream, scale_numerator / eps);
  if (!noise.ok()) return noise.status();
  return value + *noise;
}

}  // namespace

double LatticeSpec::Nearest(double x) const {
  const double lower = offset + std::floor((x - offset) / spacing) * spacing;
  const double upper = lower + spacing;
  // The floor above can land one cell off when (x - offset) / spacing rounds
  // up to an integer; compare true distances to settle it.
  if (x < lower) {
    const double below = lower - spacing;
    return (x - below) <= (lower - x) ? below : lower;
  }
  return (x - lower) <= (upper - x) ? lower : upper;
}

double TruthfulProbability(double eps, int num_outcomes) {
  if (std::isinf(eps)) return 1.0;
  const double e = std::exp(eps);
  return e / (e + (num_outcomes - 1));
}

double OtherOutcomeProbability(double eps, int num_outcomes) {
  if (std::isinf(eps)) return 0.0;
  return 1.0 / (std::exp(eps) + (num_outcomes - 1));
}

absl::StatusOr<QuadReport> Rr1(RandomStream& stream, double eps,
                               const PrivateValue& x, int level, UserId user) {
  if (absl::Status s = ValidateEpsilon(eps); !s.ok()) return s;
  const int truth = FloorDivMod4(RandomizerAccess::Read(x), level);
  QuadReport report{user, level, truth};
  if (stream.NextUniform() <= TruthfulProbability(eps, 4)) return report;
  // Uniform over the three other values.
  const int shift = 1 + static_cast<int>(stream.NextUniform() * 3.0);
  report.value = (truth + shift) % 4;
  return report;
}

absl::StatusOr<SignReport> KvRr2(RandomStream& stream, double eps,
                                 const PrivateValue& x, double center,
                                 double sigma, UserId user) {
  if (absl::Status s = ValidateEpsilon(eps); !s.ok()) return s;
  if (absl::Status s = ValidateSigma(sigma); !s.ok()) return s;
  const int truth = SignOf((RandomizerAccess::Read(x) - center) / sigma);
  return SignReport{user, std::nullopt, RespondSign(stream, eps, truth)};
}

absl::StatusOr<SignReport> OneRoundKvRr2(RandomStream& stream, double eps,
                                         const PrivateValue& x,
                                         const LatticeSpec& lattice,
                                         double sigma, UserId user,
                                         int subgroup) {
  if (absl::Status s = ValidateEpsilon(eps); !s.ok()) return s;
  if (absl::Status s = ValidateSigma(sigma); !s.ok()) return s;
  if (absl::Status s = ValidateLattice(lattice); !s.ok()) return s;
  const double value = RandomizerAccess::Read(x);
  const int truth = SignOf((value - lattice.Nearest(value)) / sigma);
  return SignReport{user, subgroup, RespondSign(stream, eps, truth)};
}

absl::StatusOr<RealReport> UvRr2(RandomStream& stream, double eps,
                                 const PrivateValue& x, double interval_lo,
                                 double interval_hi, UserId user) {
  if (absl::Status s = ValidateEpsilon(eps); !s.ok()) return s;
  if (!(interval_lo < interval_hi) || !std::isfinite(interval_lo) ||
      !std::isfinite(interval_hi)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "interval must be finite and nonempty, got [", interval_lo, ", ",
        interval_hi, "]"));
  }
  const double clipped =
      std::clamp(RandomizerAccess::Read(x), interval_lo, interval_hi);
  absl::StatusOr<double> value =
      AddLaplace(stream, eps, clipped, interval_hi - interval_lo);
  if (!value.ok()) return value.status();
  return RealReport{user, std::nullopt, *value};
}

absl::StatusOr<RealReport> OneRoundUvRr2(RandomStream& stream, double eps,
                                         const PrivateValue& x,
                                         const LatticeSpec& lattice,
                                         double noise_scale_numerator,
                                         UserId user, LevelOffset subgroup) {
  if (absl::Status s = ValidateEpsilon(eps); !s.ok()) return s;
  if (absl::Status s = ValidateLattice(lattice); !s.ok()) return s;
  if (!(noise_scale_numerator > 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "noise scale numerator must be positive, got ", noise_scale_numerator));
  }
  const double value = RandomizerAccess::Read(x);
  absl::StatusOr<double> noisy = AddLaplace(
      stream, eps, value - lattice.Nearest(value), noise_scale_numerator);
  if (!noisy.ok()) return noisy.status();
  return RealReport{user, subgroup, *noisy};
}

std::array<double, 4> Rr1OutputLaw(double eps, double x, int level) {
  const double truthful = TruthfulProbability(eps, 4);
  const double other = OtherOutcomeProbability(eps, 4);
  std::array<double, 4> law{other, other, other, other};
  law[FloorDivMod4(x, level)] = truthful;
  return law;
}

std::array<double, 2> SignOutputLaw(double eps, double x, double center) {
  const double truthful = TruthfulProbability(eps, 2);
  const double flipped = OtherOutcomeProbability(eps, 2);
  if (SignOf(x - center) > 0) return {flipped, truthful};
  return {truthful, flipped};
}

std::array<double, 2> OneRoundKvOutputLaw(double eps, double x,
                                          const LatticeSpec& lattice) {
  return SignOutputLaw(eps, x, lattice.Nearest(x));
}

}  // namespace gausstimate
