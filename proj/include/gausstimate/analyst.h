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

// Analyst-side estimation: the modular binary search for the mean, variance
// bracketing, the erf-inverse refinement and one-round subgroup selection.
// Everything here consumes debiased histograms or public values only.

#ifndef GAUSSTIMATE_ANALYST_H_
#define GAUSSTIMATE_ANALYST_H_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "gausstimate/aggregation.h"
#include "gausstimate/randomizers.h"

namespace gausstimate {

struct LevelPlan {
  LevelRange levels;
  int64_t k = 1;
  double beta = 0.05;
  double eps = 1.0;
};

// psi = ((eps + 4) / (eps sqrt 2)) * sqrt(k ln(8 L / beta)).
double MeanSearchThreshold(const LevelPlan& plan);

// tau = sqrt(2k ln(2L/beta)) + (1 + 4/eps) sqrt(2k ln(8L/beta)).
double VarianceThreshold(const LevelPlan& plan);

// Closed search interval [lo, hi]; both ends are multiples of 2^level.
struct SearchInterval {
  int level = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct MeanSearchResult {
  double mu_hat1 = 0.0;
  int stop_level = 0;
  double psi = 0.0;
  // Interval at every visited level, from L_max downward. The last entry is
  // the interval that contains mu_hat1.
  std::vector<SearchInterval> intervals;
};

// Descends from L_max while the top bin clears 0.52k + psi, narrowing the
// interval through the residue of the top bin, then picks the largest
// multiple of 2^j in the final interval whose residue is one of the two
// largest bins.
absl::StatusOr<MeanSearchResult> EstMean(
    const LevelPlan& plan, const std::map<int, QuadHistogram>& hists);

struct VarianceDecision {
  double tau = 0.0;
  std::map<int, bool> concentrated;
  int level = 0;
  double sigma_hat = 0.0;  // 2^level
};

// Smallest j such that every level j' >= j has min bin <= 0.03k + tau;
// 2^{L_max} when the top level itself is not concentrated.
absl::StatusOr<VarianceDecision> EstVar(
    const LevelPlan& plan, const std::map<int, PairedHistogram>& hists);

// sigma * sqrt(2) * erfinv((H(+1) - H(-1)) / count) + center.
absl::StatusOr<double> RefineKnownSigma(const SignHistogram& hist,
                                        int64_t count, double center,
                                        double sigma);

// Known-variance one-round lattices: offset r * sigma / 5, spacing rho * sigma,
// r = 1, ..., 5 rho.
LatticeSpec KvLattice(int r, double sigma, int rho);

// Unknown-variance one-round lattices: offset b * 2^level, spacing
// rho * 2^level, b = 1, ..., rho.
LatticeSpec UvLattice(LevelOffset subgroup, int rho);

struct SubgroupChoice {
  int index = 0;
  double center = 0.0;
  double distance = 0.0;
};

// Lattice containing the point nearest mu_hat1; ties go to the lower index.
absl::StatusOr<SubgroupChoice> SelectSubgroupKv(
    double mu_hat1, std::span<const LatticeSpec> lattices);

struct UvSubgroupChoice {
  LevelOffset subgroup;
  double center = 0.0;
  double distance = 0.0;
};

// j1 = log2(sigma_hat); chooses the offset index whose lattice S(j1, b) has the
// point nearest mu_hat1.
absl::StatusOr<UvSubgroupChoice> SelectSubgroupUv(double sigma_hat,
                                                  double mu_hat1,
                                                  LevelRange levels, int rho);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_ANALYST_H_
