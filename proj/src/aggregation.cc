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

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace gausstimate {

double DebiasCount(double eps, int num_outcomes, double count, int64_t k) {
  if (std::isinf(eps)) return count;
  const double e = std::exp(eps);
  const double denominator = e + (num_outcomes - 1);
  return (denominator / (e - 1.0)) *
         (count - static_cast<double>(k) / denominator);
}

absl::StatusOr<std::map<int, QuadHistogram>> KvAgg1(
    double eps, int64_t k, LevelRange levels,
    std::span<const QuadReport> reports) {
  if (!(eps > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive, got ", eps));
  }
  if (k < 1 || levels.size() < 1) {
    return absl::InvalidArgumentError("need k >= 1 and a nonempty level range");
  }
  std::map<int, std::array<int64_t, 4>> counts;
  for (int j = levels.min; j <= levels.max; ++j) counts[j] = {0, 0, 0, 0};
  for (const QuadReport& r : reports) {
    if (!levels.contains(r.level)) {
      return absl::FailedPreconditionError(absl::StrCat(
          "report from user ", r.user_id, " names level ", r.level,
          " outside [", levels.min, ", ", levels.max, "]"));
    }
    if (r.value < 0 || r.value > 3) {
      return absl::FailedPreconditionError(absl::StrCat(
          "report from user ", r.user_id, " has value ", r.value));
    }
    ++counts[r.level][r.value];
  }
  std::map<int, QuadHistogram> out;
  for (const auto& [level, c] : counts) {
    const int64_t total = c[0] + c[1] + c[2] + c[3];
    if (total != k) {
      return absl::FailedPreconditionError(absl::StrCat(
          "level ", level, " has ", total, " reports, expected ", k));
    }
    QuadHistogram h{level, {}, k};
    for (int a = 0; a < 4; ++a) {
      h.bins[a] = DebiasCount(eps, 4, static_cast<double>(c[a]), k);
    }
    out.emplace(level, h);
  }
  return out;
}

PairedHistogram PairAdjacent(const QuadHistogram& quad) {
  PairedHistogram paired{quad.level, {}, quad.k};
  for (int a = 0; a < 4; ++a) {
    paired.bins[a] = quad.bins[a] + quad.bins[(a + 1) % 4];
  }
  return paired;
}

absl::StatusOr<std::map<int, PairedHistogram>> Agg1(
    double eps, int64_t k, LevelRange levels,
    std::span<const QuadReport> reports) {
  absl::StatusOr<std::map<int, QuadHistogram>> quad =
      KvAgg1(eps, k, levels, reports);
  if (!quad.ok()) return quad.status();
  std::map<int, PairedHistogram> out;
  for (const auto& [level, h] : *quad) out.emplace(level, PairAdjacent(h));
  return out;
}

absl::StatusOr<SignHistogram> KvAgg2(double eps, int64_t k,
                                     std::span<const SignReport> reports) {
  if (!(eps > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive, got ", eps));
  }
  if (static_cast<int64_t>(reports.size()) != k) {
    return absl::FailedPreconditionError(absl::StrCat(
        "got ", reports.size(), " sign reports, expected ", k));
  }
  int64_t plus = 0;
  int64_t minus = 0;
  for (const SignReport& r : reports) {
    if (r.value == 1) {
      ++plus;
    } else if (r.value == -1) {
      ++minus;
    } else {
      return absl::FailedPreconditionError(absl::StrCat(
          "report from user ", r.user_id, " has sign value ", r.value));
    }
  }
  return SignHistogram{DebiasCount(eps, 2, static_cast<double>(minus), k),
                       DebiasCount(eps, 2, static_cast<double>(plus), k), k};
}

}  // namespace gausstimate
