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

// End-to-end protocols. The orchestrator queries simulated users through a
// UserPool (the only holder of private samples) and hands the analyst nothing
// but the transcript of reports and its own public broadcasts.

#ifndef GAUSSTIMATE_PROTOCOLS_H_
#define GAUSSTIMATE_PROTOCOLS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "gausstimate/aggregation.h"
#include "gausstimate/analyst.h"
#include "gausstimate/randomizers.h"
#include "gausstimate/transcript.h"

namespace gausstimate {

enum class ProtocolId { kKvTwoRound, kKvOneRound, kUvTwoRound, kUvOneRound };

// "kv2", "kv1", "uv2", "uv1".
absl::string_view ProtocolName(ProtocolId id);
absl::StatusOr<ProtocolId> ParseProtocol(absl::string_view name);
bool IsKnownVariance(ProtocolId id);
bool IsOneRound(ProtocolId id);

struct KnownSigma {
  double sigma = 1.0;
};
struct BoundedSigma {
  double sigma_min = 1.0;
  double sigma_max = 1.0;
};
using VarianceMode = std::variant<KnownSigma, BoundedSigma>;

struct SubgroupOverrides {
  std::optional<int64_t> k;   // round-one subgroup size (known variance)
  std::optional<int64_t> k1;  // round-one subgroup size (unknown variance)
  std::optional<int64_t> k2;  // one-round second-stage subgroup size
};

// Public protocol parameters. The simulated truth (mu, sigma of the data) is
// deliberately not part of this record; see SimulationTruth in harness.h.
struct ProtocolConfig {
  ProtocolId protocol = ProtocolId::kKvTwoRound;
  double eps = 1.0;  // +inf disables randomization (noiseless limit)
  double beta = 0.05;
  int64_t n = 0;
  VarianceMode variance_mode = KnownSigma{};
  SubgroupOverrides overrides;
  double c_k = 8.0;
  bool paper_constants = false;
};

absl::Status ValidateConfig(const ProtocolConfig& config);

// Deterministic assignment of users to groups. U1 = [0, n/2) is split into
// round-one level groups of size k1; U2 = [n/2, n) into num_subgroups groups
// of size k2 (a single group for two-round protocols). Leftover users are
// never queried.
struct PartitionPlan {
  ProtocolConfig config;
  int64_t k1 = 0;
  LevelRange levels;
  int rho = 0;
  int64_t k2 = 0;
  int num_subgroups = 1;

  int64_t half() const { return config.n / 2; }
  LevelPlan level_plan() const;
  double known_sigma() const;

  std::optional<int> LevelOf(UserId user) const;
  std::optional<int> SubgroupOf(UserId user) const;
  UserId LevelBegin(int level) const;
  UserId SubgroupBegin(int subgroup) const;
  int64_t discarded() const;

  // Lattice a one-round subgroup centres on.
  LatticeSpec SubgroupLattice(int subgroup) const;
  LevelOffset UvSubgroup(int subgroup) const;
  int UvSubgroupIndex(LevelOffset subgroup) const;
  std::string LevelTag(int level) const;
  std::string SubgroupTag(int subgroup) const;
};

// Default round-one size for known variance:
// ceil(c_k * ((eps + 4) / (eps sqrt 2))^2 * ln(8 max(n, 2) / beta)).
// Default round-one subgroup sizes: c_k * s^2 * ln(8n / beta) with
// s = (eps + 4) / (eps * sqrt(2)) for known variance and s = 2 + 4 / eps for
// unknown variance. The unknown-variance size is further capped so that the
// levels up to ceil(log2 sigma_max) fit in the budget.
int64_t DefaultKnownVarianceK(double eps, double beta, int64_t n, double c_k);
int64_t DefaultUnknownVarianceK(double eps, double beta, int64_t n,
                                double c_k);

absl::StatusOr<PartitionPlan> PlanPartition(const ProtocolConfig& config);

// Owner of the private samples. Every query consumes the user's single
// message; a second query for the same user is an error.
class UserPool {
 public:
  UserPool(std::vector<PrivateValue> samples, uint64_t master_seed,
           uint64_t trial_index);

  int64_t size() const { return static_cast<int64_t>(samples_.size()); }
  int64_t messages_sent() const { return messages_sent_; }

  absl::StatusOr<QuadReport> Rr1(UserId user, double eps, int level);
  absl::StatusOr<SignReport> KvRr2(UserId user, double eps, double center,
                                   double sigma);
  absl::StatusOr<SignReport> OneRoundKvRr2(UserId user, double eps,
                                           const LatticeSpec& lattice,
                                           double sigma, int subgroup);
  absl::StatusOr<RealReport> UvRr2(UserId user, double eps, double lo,
                                   double hi);
  absl::StatusOr<RealReport> OneRoundUvRr2(UserId user, double eps,
                                           const LatticeSpec& lattice,
                                           double noise_scale_numerator,
                                           LevelOffset subgroup);

 private:
  absl::StatusOr<RandomStream> Claim(UserId user);

  std::vector<PrivateValue> samples_;
  std::vector<bool> used_;
  uint64_t master_seed_;
  uint64_t trial_index_;
  int64_t messages_sent_ = 0;
};

struct EstimateOutcome {
  ProtocolId protocol = ProtocolId::kKvTwoRound;
  double mu_hat1 = 0.0;
  std::optional<double> sigma_hat;
  double mu_hat2 = 0.0;
  // Plan summary.
  int64_t k1 = 0;
  LevelRange levels;
  int64_t k2 = 0;
  int rho = 0;
  int num_subgroups = 1;
  // Second-stage subgroup used by a one-round protocol, and the center it
  // was refined around (mu_hat1 for two-round known variance).
  std::optional<int> selected_subgroup;
  double center = 0.0;
  // Number of reports that fed the final estimate.
  int64_t aggregated_reports = 0;
};

struct RoundOneEstimate {
  MeanSearchResult mean;
  std::optional<VarianceDecision> variance;
};

// Analyst, first stage: round-one quad reports of U1 only.
absl::StatusOr<RoundOneEstimate> AnalyzeRoundOne(
    const PartitionPlan& plan, std::span<const ReportRecord> records);

// Two-round protocols only: the public interval for UVRR2.
std::pair<double, double> UvInterval(const PartitionPlan& plan,
                                     double mu_hat1, double sigma_hat);

// Analyst, second stage: the U2 reports (round 2 for two-round protocols, the
// U2 part of round 1 for one-round protocols).
absl::StatusOr<EstimateOutcome> FinishEstimate(
    const PartitionPlan& plan, const RoundOneEstimate& first,
    std::span<const ReportRecord> records);

struct ProtocolRun {
  PartitionPlan plan;
  EstimateOutcome outcome;
  Transcript transcript;
};

absl::StatusOr<ProtocolRun> RunKvTwoRound(const ProtocolConfig& config,
                                          UserPool& users);
absl::StatusOr<ProtocolRun> RunKvOneRound(const ProtocolConfig& config,
                                          UserPool& users);
absl::StatusOr<ProtocolRun> RunUvTwoRound(const ProtocolConfig& config,
                                          UserPool& users);
absl::StatusOr<ProtocolRun> RunUvOneRound(const ProtocolConfig& config,
                                          UserPool& users);
absl::StatusOr<ProtocolRun> RunProtocol(const ProtocolConfig& config,
                                        UserPool& users);

// Round-0 broadcast announcing the public parameters, and its inverse.
BroadcastRecord ParametersBroadcast(const ProtocolConfig& config);
absl::StatusOr<ProtocolConfig> ConfigFromBroadcast(const BroadcastRecord& b);

struct ReplayResult {
  EstimateOutcome recomputed;
  bool matches = false;
  // Name and values of the first analyst output that differs.
  std::string divergence;
};

// Recomputes every analyst output from the transcript alone (plus `config`
// when given, else the round-0 parameter broadcast) and compares with the
// recorded broadcasts. Malformed transcripts are errors; a well-formed
// transcript whose outputs disagree yields matches = false.
absl::StatusOr<ReplayResult> Replay(
    const Transcript& transcript,
    const std::optional<ProtocolConfig>& config = std::nullopt);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_PROTOCOLS_H_
