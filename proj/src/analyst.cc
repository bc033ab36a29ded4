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

#include "gausstimate/analyst.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "gausstimate/numerics.h"

namespace gausstimate {
namespace {

double EuclidMod4(double c) {
  double r = std::fmod(c, 4.0);
  return r < 0.0 ? r + 4.0 : r;
}

// Index of the largest bin, skipping `exclude`; ties go to the lower index.
int ArgMax(const std::array<double, 4>& bins, int exclude = -1) {
  int best = -1;
  for (int a = 0; a < 4; ++a) {
    if (a == exclude) continue;
    if (best < 0 || bins[a] > bins[best]) best = a;
  }
  return best;
}

absl::Status ValidatePlan(const LevelPlan& plan) {
  if (!(plan.eps > 0.0) || !(plan.beta > 0.0 && plan.beta < 1.0) ||
      plan.k < 1 || plan.levels.size() < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "invalid level plan: eps=", plan.eps, " beta=", plan.beta,
        " k=", plan.k, " levels=[", plan.levels.min, ", ", plan.levels.max,
        "]"));
  }
  return absl::OkStatus();
}

template <typename Hist>
absl::Status CheckCoverage(const LevelPlan& plan,
                           const std::map<int, Hist>& hists) {
  for (int j = plan.levels.min; j <= plan.levels.max; ++j) {
    if (!hists.contains(j)) {
      return absl::FailedPreconditionError(
          absl::StrCat("no histogram for level ", j));
    }
  }
  return absl::OkStatus();
}

// Integer c with c * 2^j in [lo, hi] and c = residue mod 4, if any.
std::optional<double> MatchResidue(const SearchInterval& interval,
                                   int residue) {
  const double first = std::ceil(std::ldexp(interval.lo, -interval.level));
  const double last = std::floor(std::ldexp(interval.hi, -interval.level));
  for (double c = first; c <= last && c < first + 4.0; c += 1.0) {
    if (EuclidMod4(c) == residue) return c;
  }
  return std::nullopt;
}

}  // namespace

double MeanSearchThreshold(const LevelPlan& plan) {
  const double L = plan.levels.size();
  return ((1.0 + 4.0 / plan.eps) / std::sqrt(2.0)) *
         std::sqrt(static_cast<double>(plan.k) * std::log(8.0 * L / plan.beta));
}

double VarianceThreshold(const LevelPlan& plan) {
  const double L = plan.levels.size();
  const double k = static_cast<double>(plan.k);
  return std::sqrt(2.0 * k * std::log(2.0 * L / plan.beta)) +
         (1.0 + 4.0 / plan.eps) *
             std::sqrt(2.0 * k * std::log(8.0 * L / plan.beta));
}

absl::StatusOr<MeanSearchResult> EstMean(
    const LevelPlan& plan, const std::map<int, QuadHistogram>& hists) {
  if (absl::Status s = ValidatePlan(plan); !s.ok()) return s;
  if (absl::Status s = CheckCoverage(plan, hists); !s.ok()) return s;

  MeanSearchResult result;
  result.psi = MeanSearchThreshold(plan);
  const double cutoff = 0.52 * static_cast<double>(plan.k) + result.psi;

  int j = plan.levels.max;
  std::map<int, SearchInterval> interval_at;
  interval_at[j] = {j, 0.0, std::ldexp(1.0, j)};
  result.intervals.push_back(interval_at[j]);

  while (j >= plan.levels.min) {
    const auto& bins = hists.at(j).bins;
    const int top = ArgMax(bins);
    if (bins[top] < cutoff) break;
    std::optional<double> c = MatchResidue(interval_at[j], top);
    // No multiple of 2^j in I_j has the right residue: treat the level as
    // unconcentrated and stop here.
    if (!c.has_value()) break;
    const double step = std::ldexp(1.0, j);
    interval_at[j - 1] = {j - 1, *c * step, (*c + 1.0) * step};
    --j;
    if (j >= plan.levels.min) result.intervals.push_back(interval_at[j]);
  }
  j = std::max(j, plan.levels.min);

  const auto& bins = hists.at(j).bins;
  const int first = ArgMax(bins);
  const int second = ArgMax(bins, first);
  const SearchInterval& final_interval = interval_at.at(j);
  const double lowest = std::ceil(std::ldexp(final_interval.lo, -j));
  const double highest = std::floor(std::ldexp(final_interval.hi, -j));
  std::optional<double> chosen;
  for (double c = highest; c >= lowest && c > highest - 4.0; c -= 1.0) {
    const double r = EuclidMod4(c);
    if (r == first || r == second) {
      chosen = c;
      break;
    }
  }
  if (!chosen.has_value()) {
    // Only reachable on the two-point initial interval: take the candidate
    // whose residue carries more mass (the larger one on ties).
    chosen = highest;
    for (double c = highest; c >= lowest; c -= 1.0) {
      if (bins[static_cast<int>(EuclidMod4(c))] >
          bins[static_cast<int>(EuclidMod4(*chosen))]) {
        chosen = c;
      }
    }
  }
  result.stop_level = j;
  result.mu_hat1 = std::ldexp(*chosen, j);
  // Keep the trace ending at the interval used for the final choice.
  while (!result.intervals.empty() && result.intervals.back().level < j) {
    result.intervals.pop_back();
  }
  return result;
}

absl::StatusOr<VarianceDecision> EstVar(
    const LevelPlan& plan, const std::map<int, PairedHistogram>& hists) {
  if (absl::Status s = ValidatePlan(plan); !s.ok()) return s;
  if (absl::Status s = CheckCoverage(plan, hists); !s.ok()) return s;

  VarianceDecision decision;
  decision.tau = VarianceThreshold(plan);
  const double cutoff = 0.03 * static_cast<double>(plan.k) + decision.tau;
  for (int j = plan.levels.min; j <= plan.levels.max; ++j) {
    const auto& bins = hists.at(j).bins;
    decision.concentrated[j] =
        *std::min_element(bins.begin(), bins.end()) <= cutoff;
  }
  int j = plan.levels.max;
  if (!decision.concentrated[j]) {
    decision.level = plan.levels.max;
  } else {
    while (j - 1 >= plan.levels.min && decision.concentrated[j - 1]) --j;
    decision.level = j;
  }
  decision.sigma_hat = std::ldexp(1.0, decision.level);
  return decision;
}

absl::StatusOr<double> RefineKnownSigma(const SignHistogram& hist,
                                        int64_t count, double center,
                                        double sigma) {
  if (count <= 0) {
    return absl::FailedPreconditionError(
        absl::StrCat("report count must be positive, got ", count));
  }
  if (!(sigma > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive, got ", sigma));
  }
  const double skew = (hist.plus - hist.minus) / static_cast<double>(count);
  return sigma * std::sqrt(2.0) * ErfInv(skew) + center;
}

LatticeSpec KvLattice(int r, double sigma, int rho) {
  return {r * sigma / 5.0, rho * sigma};
}

LatticeSpec UvLattice(LevelOffset subgroup, int rho) {
  const double unit = std::ldexp(1.0, subgroup.level);
  return {subgroup.offset_index * unit, rho * unit};
}

absl::StatusOr<SubgroupChoice> SelectSubgroupKv(
    double mu_hat1, std::span<const LatticeSpec> lattices) {
  if (lattices.empty()) {
    return absl::InvalidArgumentError("no lattices to choose from");
  }
  SubgroupChoice best;
  for (size_t i = 0; i < lattices.size(); ++i) {
    const double center = lattices[i].Nearest(mu_hat1);
    const double distance = std::fabs(center - mu_hat1);
    if (i == 0 || distance < best.distance) {
      best = {static_cast<int>(i), center, distance};
    }
  }
  return best;
}

absl::StatusOr<UvSubgroupChoice> SelectSubgroupUv(double sigma_hat,
                                                  double mu_hat1,
                                                  LevelRange levels, int rho) {
  int exponent = 0;
  const double mantissa = std::frexp(sigma_hat, &exponent);
  if (!(sigma_hat > 0.0) || mantissa != 0.5) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma_hat must be a power of two, got ", sigma_hat));
  }
  const int j1 = exponent - 1;
  if (!levels.contains(j1)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "log2(sigma_hat) = ", j1, " outside [", levels.min, ", ", levels.max,
        "]"));
  }
  if (rho < 1) return absl::InvalidArgumentError("rho must be >= 1");
  UvSubgroupChoice best;
  for (int b = 1; b <= rho; ++b) {
    const LevelOffset subgroup{j1, b};
    const double center = UvLattice(subgroup, rho).Nearest(mu_hat1);
    const double distance = std::fabs(center - mu_hat1);
    if (b == 1 || distance < best.distance) best = {subgroup, center, distance};
  }
  return best;
}

}  // namespace gausstimate
