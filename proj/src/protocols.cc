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

#include "gausstimate/protocols.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/string_view.h"
#include "gausstimate/aggregation.h"
#include "gausstimate/analyst.h"
#include "gausstimate/numerics.h"
#include "gausstimate/randomizers.h"
#include "gausstimate/transcript.h"

namespace gausstimate {
namespace {

constexpr absl::string_view kLowerBoundHint =
    "n is too small for this configuration; the protocols need "
    "n / log n = Omega(log(mu) log(1/beta) / eps^2)";

double Spread(double eps) { return (1.0 + 4.0 / eps) / std::sqrt(2.0); }

// Largest subgroup constant the accuracy analysis asks for at L levels.
double ProofGradeK(double eps, double beta, int levels,
                   bool unknown_variance) {
  const double L = levels;
  const double spread2 = Spread(eps) * Spread(eps);
  double k = std::max({5000.0 * std::log(5.0 * L / beta),
                       625.0 * spread2 * std::log(4.0 * L / beta),
                       40.0 * spread2 * std::log(8.0 * L / beta)});
  if (unknown_variance) {
    const double t = 2.0 + 4.0 / eps;
    k = std::max(k, 800.0 * t * t * std::log(8.0 * L / beta));
  }
  return std::ceil(k);
}

int FloorLog2(double x) { return static_cast<int>(std::floor(std::log2(x))); }
int CeilLog2(double x) { return static_cast<int>(std::ceil(std::log2(x))); }

ReportRecord ToRecord(int round, const QuadReport& r, std::string tag) {
  return {round, r.user_id, std::move(tag), ReportKind::kQuad,
          static_cast<double>(r.value)};
}
ReportRecord ToRecord(int round, const SignReport& r, std::string tag) {
  return {round, r.user_id, std::move(tag), ReportKind::kSign,
          static_cast<double>(r.value)};
}
ReportRecord ToRecord(int round, const RealReport& r, std::string tag) {
  return {round, r.user_id, std::move(tag), ReportKind::kReal, r.value};
}

absl::Status MalformedRecord(const ReportRecord& r, absl::string_view what) {
  return absl::FailedPreconditionError(
      absl::StrCat("report from user ", r.user, ": ", what));
}

absl::Status CheckRecord(const ReportRecord& r, ReportKind kind,
                         absl::string_view tag) {
  if (r.kind != kind) {
    return MalformedRecord(
        r, absl::StrCat("expected a ", ReportKindName(kind), " report"));
  }
  if (kind != ReportKind::kReal && r.value != std::trunc(r.value)) {
    return MalformedRecord(r, "non-integer categorical value");
  }
  if (!std::isfinite(r.value)) return MalformedRecord(r, "non-finite value");
  if (r.subgroup != tag) {
    return MalformedRecord(r, absl::StrCat("subgroup tag \"", r.subgroup,
                                           "\", expected \"", tag, "\""));
  }
  return absl::OkStatus();
}

absl::Status CollectRoundOne(const PartitionPlan& plan, UserPool& users,
                             Transcript& transcript) {
  for (int j = plan.levels.min; j <= plan.levels.max; ++j) {
    const UserId begin = plan.LevelBegin(j);
    const std::string tag = plan.LevelTag(j);
    for (UserId u = begin; u < begin + plan.k1; ++u) {
      absl::StatusOr<QuadReport> report = users.Rr1(u, plan.config.eps, j);
      if (!report.ok()) return report.status();
      transcript.Add(ToRecord(1, *report, tag));
    }
  }
  return absl::OkStatus();
}

// Published after the last round, so round-2 queries stay minimal.
BroadcastRecord EstimateBroadcast(int round, const EstimateOutcome& outcome) {
  BroadcastRecord b{round, {}};
  b.Add("mu_hat1", outcome.mu_hat1);
  if (outcome.sigma_hat.has_value()) b.Add("sigma_hat", *outcome.sigma_hat);
  b.Add("mu_hat2", outcome.mu_hat2);
  return b;
}

std::vector<ReportRecord> ReportsOfRound(const Transcript& t, int round) {
  std::vector<ReportRecord> out;
  for (const auto& e : t.entries()) {
    const auto* r = std::get_if<ReportRecord>(&e);
    if (r != nullptr && r->round == round) out.push_back(*r);
  }
  return out;
}

void FillPlanSummary(const PartitionPlan& plan, EstimateOutcome& outcome) {
  outcome.protocol = plan.config.protocol;
  outcome.k1 = plan.k1;
  outcome.levels = plan.levels;
  outcome.k2 = plan.k2;
  outcome.rho = plan.rho;
  outcome.num_subgroups = plan.num_subgroups;
}

absl::Status CheckMode(const ProtocolConfig& config, ProtocolId expected) {
  if (config.protocol != expected) {
    return absl::InvalidArgumentError(
        absl::StrCat("config is for protocol ", ProtocolName(config.protocol),
                     ", not ", ProtocolName(expected)));
  }
  return ValidateConfig(config);
}

bool SameValue(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

}  // namespace

absl::string_view ProtocolName(ProtocolId id) {
  switch (id) {
    case ProtocolId::kKvTwoRound:
      return "kv2";
    case ProtocolId::kKvOneRound:
      return "kv1";
    case ProtocolId::kUvTwoRound:
      return "uv2";
    case ProtocolId::kUvOneRound:
      return "uv1";
  }
  return "unknown";
}

absl::StatusOr<ProtocolId> ParseProtocol(absl::string_view name) {
  for (ProtocolId id : {ProtocolId::kKvTwoRound, ProtocolId::kKvOneRound,
                        ProtocolId::kUvTwoRound, ProtocolId::kUvOneRound}) {
    if (ProtocolName(id) == name) return id;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown protocol \"", name, "\" (want kv2|kv1|uv2|uv1)"));
}

bool IsKnownVariance(ProtocolId id) {
  return id == ProtocolId::kKvTwoRound || id == ProtocolId::kKvOneRound;
}

bool IsOneRound(ProtocolId id) {
  return id == ProtocolId::kKvOneRound || id == ProtocolId::kUvOneRound;
}

absl::Status ValidateConfig(const ProtocolConfig& config) {
  if (!(config.eps > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eps must be positive, got ", config.eps));
  }
  if (!(config.beta > 0.0 && config.beta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must lie in (0, 1), got ", config.beta));
  }
  if (config.n < 2 || config.n % 2 != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("n must be an even integer >= 2, got ", config.n));
  }
  if (!(config.c_k > 0.0)) {
    return absl::InvalidArgumentError("c_k must be positive");
  }
  if (IsKnownVariance(config.protocol)) {
    const auto* known = std::get_if<KnownSigma>(&config.variance_mode);
    if (known == nullptr) {
      return absl::InvalidArgumentError(
          absl::StrCat(ProtocolName(config.protocol),
                       " needs a known sigma, not sigma bounds"));
    }
    if (!(known->sigma > 0.0) || !std::isfinite(known->sigma)) {
      return absl::InvalidArgumentError(
          absl::StrCat("sigma must be positive, got ", known->sigma));
    }
  } else {
    const auto* bounded = std::get_if<BoundedSigma>(&config.variance_mode);
    if (bounded == nullptr) {
      return absl::InvalidArgumentError(
          absl::StrCat(ProtocolName(config.protocol),
                       " needs sigma bounds, not a known sigma"));
    }
    if (!(bounded->sigma_min > 0.0) ||
        !(bounded->sigma_min <= bounded->sigma_max) ||
        !std::isfinite(bounded->sigma_max)) {
      return absl::InvalidArgumentError(
          absl::StrCat("need 0 < sigma_min <= sigma_max, got [",
                       bounded->sigma_min, ", ", bounded->sigma_max, "]"));
    }
  }
  const auto& o = config.overrides;
  for (const auto& v : {o.k, o.k1, o.k2}) {
    if (v.has_value() && *v < 1) {
      return absl::InvalidArgumentError("subgroup sizes must be >= 1");
    }
  }
  if (o.k2.has_value() && !IsOneRound(config.protocol)) {
    return absl::InvalidArgumentError(
        "k2 only applies to one-round protocols");
  }
  return absl::OkStatus();
}

int64_t DefaultKnownVarianceK(double eps, double beta, int64_t n, double c_k) {
  const double spread = Spread(eps);
  const double nn = static_cast<double>(std::max<int64_t>(n, 2));
  return static_cast<int64_t>(
      std::ceil(c_k * spread * spread * std::log(8.0 * nn / beta)));
}

int64_t DefaultUnknownVarianceK(double eps, double beta, int64_t n,
                                double c_k) {
  const double t = 2.0 + 4.0 / eps;
  const double nn = static_cast<double>(std::max<int64_t>(n, 2));
  return static_cast<int64_t>(
      std::ceil(c_k * t * t * std::log(8.0 * nn / beta)));
}

LevelPlan PartitionPlan::level_plan() const {
  return {levels, k1, config.beta, config.eps};
}

double PartitionPlan::known_sigma() const {
  const auto* known = std::get_if<KnownSigma>(&config.variance_mode);
  return known == nullptr ? 0.0 : known->sigma;
}

std::optional<int> PartitionPlan::LevelOf(UserId user) const {
  if (user < 0 || user >= static_cast<int64_t>(levels.size()) * k1) {
    return std::nullopt;
  }
  return levels.min + static_cast<int>(user / k1);
}

std::optional<int> PartitionPlan::SubgroupOf(UserId user) const {
  const int64_t offset = user - half();
  if (offset < 0 || offset >= num_subgroups * k2) return std::nullopt;
  return static_cast<int>(offset / k2);
}

UserId PartitionPlan::LevelBegin(int level) const {
  return static_cast<int64_t>(level - levels.min) * k1;
}

UserId PartitionPlan::SubgroupBegin(int subgroup) const {
  return half() + static_cast<int64_t>(subgroup) * k2;
}

int64_t PartitionPlan::discarded() const {
  return config.n - static_cast<int64_t>(levels.size()) * k1 -
         static_cast<int64_t>(num_subgroups) * k2;
}

LatticeSpec PartitionPlan::SubgroupLattice(int subgroup) const {
  if (config.protocol == ProtocolId::kKvOneRound) {
    return KvLattice(subgroup + 1, known_sigma(), rho);
  }
  return UvLattice(UvSubgroup(subgroup), rho);
}

LevelOffset PartitionPlan::UvSubgroup(int subgroup) const {
  return {levels.min + subgroup / rho, subgroup % rho + 1};
}

int PartitionPlan::UvSubgroupIndex(LevelOffset subgroup) const {
  return (subgroup.level - levels.min) * rho + (subgroup.offset_index - 1);
}

std::string PartitionPlan::LevelTag(int level) const {
  return absl::StrCat("L", level);
}

std::string PartitionPlan::SubgroupTag(int subgroup) const {
  switch (config.protocol) {
    case ProtocolId::kKvOneRound:
      return absl::StrCat("R", subgroup + 1);
    case ProtocolId::kUvOneRound: {
      const LevelOffset s = UvSubgroup(subgroup);
      return absl::StrCat("J", s.level, "B", s.offset_index);
    }
    default:
      return "U2";
  }
}

absl::StatusOr<PartitionPlan> PlanPartition(const ProtocolConfig& config) {
  if (absl::Status s = ValidateConfig(config); !s.ok()) return s;
  PartitionPlan plan;
  plan.config = config;
  const int64_t half = config.n / 2;
  const auto& o = config.overrides;

  if (IsKnownVariance(config.protocol)) {
    const double sigma = std::get<KnownSigma>(config.variance_mode).sigma;
    std::optional<int64_t> k = o.k.has_value() ? o.k : o.k1;
    if (!k.has_value()) {
      if (config.paper_constants) {
        int levels = 0;
        for (int L = 1; 2.0 * L * ProofGradeK(config.eps, config.beta, L,
                                                 false) <=
                        static_cast<double>(config.n);
             ++L) {
          levels = L;
        }
        if (levels == 0) {
          return absl::InvalidArgumentError(absl::StrCat(
              kLowerBoundHint, " (proof-grade constants need k >= ",
              ProofGradeK(config.eps, config.beta, 1, false), ")"));
        }
        k = half / levels;
      } else {
        k = DefaultKnownVarianceK(config.eps, config.beta, config.n,
                                  config.c_k);
      }
    }
    const int64_t L = half / *k;
    if (L < 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          kLowerBoundHint, " (k = ", *k, " but |U1| = ", half, ")"));
    }
    plan.k1 = *k;
    plan.levels.min = FloorLog2(sigma);
    plan.levels.max = plan.levels.min + static_cast<int>(L) - 1;
  } else {
    const auto& bounds = std::get<BoundedSigma>(config.variance_mode);
    const int l_min = FloorLog2(bounds.sigma_min);
    const int top = CeilLog2(bounds.sigma_max);
    const int needed = top - l_min + 1;
    std::optional<int64_t> k1 = o.k1.has_value() ? o.k1 : o.k;
    if (!k1.has_value()) {
      k1 = std::min(
          DefaultUnknownVarianceK(config.eps, config.beta, config.n,
                                  config.c_k),
          std::max<int64_t>(half / needed, 1));
      if (config.paper_constants &&
          static_cast<double>(*k1) <
              ProofGradeK(config.eps, config.beta, needed, true)) {
        return absl::InvalidArgumentError(absl::StrCat(
            kLowerBoundHint, " (proof-grade constants need k1 >= ",
            ProofGradeK(config.eps, config.beta, needed, true), ")"));
      }
    }
    const int64_t L1 = *k1 > 0 ? half / *k1 : 0;
    if (L1 < 1 || l_min + L1 - 1 < top) {
      return absl::InvalidArgumentError(absl::StrCat(
          kLowerBoundHint, " (levels [", l_min, ", ", top, "] need ", needed,
          " groups of k1 = ", *k1, ", but |U1| = ", half, ")"));
    }
    plan.k1 = *k1;
    plan.levels.min = l_min;
    plan.levels.max = l_min + static_cast<int>(L1) - 1;
  }

  const double log4n = std::log(4.0 * static_cast<double>(config.n));
  switch (config.protocol) {
    case ProtocolId::kKvOneRound:
      plan.rho = static_cast<int>(std::ceil(2.0 * std::sqrt(log4n)));
      plan.num_subgroups = 5 * plan.rho;
      break;
    case ProtocolId::kUvOneRound:
      plan.rho = static_cast<int>(std::ceil(std::sqrt(log4n) + 6.0));
      plan.num_subgroups = plan.levels.size() * plan.rho;
      break;
    default:
      plan.num_subgroups = 1;
  }
  const int64_t max_k2 = half / plan.num_subgroups;
  if (max_k2 < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        kLowerBoundHint, " (", plan.num_subgroups,
        " second-stage subgroups but |U2| = ", half, ")"));
  }
  if (o.k2.has_value() && *o.k2 > max_k2) {
    return absl::InvalidArgumentError(
        absl::StrCat("k2 = ", *o.k2, " exceeds |U2| / ", plan.num_subgroups,
                     " = ", max_k2));
  }
  plan.k2 = o.k2.value_or(max_k2);
  return plan;
}

UserPool::UserPool(std::vector<PrivateValue> samples, uint64_t master_seed,
                   uint64_t trial_index)
    : samples_(std::move(samples)),
      used_(samples_.size(), false),
      master_seed_(master_seed),
      trial_index_(trial_index) {}

absl::StatusOr<RandomStream> UserPool::Claim(UserId user) {
  if (user < 0 || user >= size()) {
    return absl::OutOfRangeError(absl::StrCat("no user ", user));
  }
  if (used_[user]) {
    return absl::FailedPreconditionError(
        absl::StrCat("user ", user, " already sent its message"));
  }
  used_[user] = true;
  ++messages_sent_;
  return RandomStream(master_seed_,
                      DeriveStreamId(trial_index_, static_cast<uint64_t>(user),
                                     StreamRole::kRandomizer));
}

absl::StatusOr<QuadReport> UserPool::Rr1(UserId user, double eps, int level) {
  absl::StatusOr<RandomStream> stream = Claim(user);
  if (!stream.ok()) return stream.status();
  return gausstimate::Rr1(*stream, eps, samples_[user], level, user);
}

absl::StatusOr<SignReport> UserPool::KvRr2(UserId user, double eps,
                                           double center, double sigma) {
  absl::StatusOr<RandomStream> stream = Claim(user);
  if (!stream.ok()) return stream.status();
  return gausstimate::KvRr2(*stream, eps, samples_[user], center, sigma, user);
}

absl::StatusOr<SignReport> UserPool::OneRoundKvRr2(UserId user, double eps,
                                                   const LatticeSpec& lattice,
                                                   double sigma, int subgroup) {
  absl::StatusOr<RandomStream> stream = Claim(user);
  if (!stream.ok()) return stream.status();
  return gausstimate::OneRoundKvRr2(*stream, eps, samples_[user], lattice,
                                    sigma, user, subgroup);
}

absl::StatusOr<RealReport> UserPool::UvRr2(UserId user, double eps, double lo,
                                           double hi) {
  absl::StatusOr<RandomStream> stream = Claim(user);
  if (!stream.ok()) return stream.status();
  return gausstimate::UvRr2(*stream, eps, samples_[user], lo, hi, user);
}

absl::StatusOr<RealReport> UserPool::OneRoundUvRr2(
    UserId user, double eps, const LatticeSpec& lattice,
    double noise_scale_numerator, LevelOffset subgroup) {
  absl::StatusOr<RandomStream> stream = Claim(user);
  if (!stream.ok()) return stream.status();
  return gausstimate::OneRoundUvRr2(*stream, eps, samples_[user], lattice,
                                    noise_scale_numerator, user, subgroup);
}

absl::StatusOr<RoundOneEstimate> AnalyzeRoundOne(
    const PartitionPlan& plan, std::span<const ReportRecord> records) {
  std::vector<QuadReport> quads;
  quads.reserve(static_cast<size_t>(plan.levels.size() * plan.k1));
  for (const ReportRecord& r : records) {
    std::optional<int> level = plan.LevelOf(r.user);
    if (!level.has_value()) continue;
    if (absl::Status s = CheckRecord(r, ReportKind::kQuad, plan.LevelTag(*level));
        !s.ok()) {
      return s;
    }
    quads.push_back({r.user, *level, static_cast<int>(r.value)});
  }
  const LevelPlan level_plan = plan.level_plan();
  absl::StatusOr<std::map<int, QuadHistogram>> quad_hists =
      KvAgg1(plan.config.eps, plan.k1, plan.levels, quads);
  if (!quad_hists.ok()) return quad_hists.status();
  RoundOneEstimate estimate;
  absl::StatusOr<MeanSearchResult> mean = EstMean(level_plan, *quad_hists);
  if (!mean.ok()) return mean.status();
  estimate.mean = *std::move(mean);
  if (!IsKnownVariance(plan.config.protocol)) {
    absl::StatusOr<std::map<int, PairedHistogram>> paired =
        Agg1(plan.config.eps, plan.k1, plan.levels, quads);
    if (!paired.ok()) return paired.status();
    absl::StatusOr<VarianceDecision> variance = EstVar(level_plan, *paired);
    if (!variance.ok()) return variance.status();
    estimate.variance = *std::move(variance);
  }
  return estimate;
}

std::pair<double, double> UvInterval(const PartitionPlan& plan, double mu_hat1,
                                     double sigma_hat) {
  const double half_width =
      sigma_hat *
      (2.0 + std::sqrt(std::log(4.0 * static_cast<double>(plan.config.n))));
  return {mu_hat1 - half_width, mu_hat1 + half_width};
}

absl::StatusOr<EstimateOutcome> FinishEstimate(
    const PartitionPlan& plan, const RoundOneEstimate& first,
    std::span<const ReportRecord> records) {
  EstimateOutcome outcome;
  FillPlanSummary(plan, outcome);
  outcome.mu_hat1 = first.mean.mu_hat1;
  if (first.variance.has_value()) outcome.sigma_hat = first.variance->sigma_hat;
  const double eps = plan.config.eps;

  // Subgroup whose reports feed the final estimate.
  int chosen = 0;
  switch (plan.config.protocol) {
    case ProtocolId::kKvTwoRound:
    case ProtocolId::kUvTwoRound:
      outcome.center = outcome.mu_hat1;
      break;
    case ProtocolId::kKvOneRound: {
      std::vector<LatticeSpec> lattices;
      for (int g = 0; g < plan.num_subgroups; ++g) {
        lattices.push_back(plan.SubgroupLattice(g));
      }
      absl::StatusOr<SubgroupChoice> choice =
          SelectSubgroupKv(outcome.mu_hat1, lattices);
      if (!choice.ok()) return choice.status();
      chosen = choice->index;
      outcome.center = choice->center;
      outcome.selected_subgroup = chosen;
      break;
    }
    case ProtocolId::kUvOneRound: {
      if (!outcome.sigma_hat.has_value()) {
        return absl::InternalError("uv1 needs a variance estimate");
      }
      absl::StatusOr<UvSubgroupChoice> choice = SelectSubgroupUv(
          *outcome.sigma_hat, outcome.mu_hat1, plan.levels, plan.rho);
      if (!choice.ok()) return choice.status();
      chosen = plan.UvSubgroupIndex(choice->subgroup);
      outcome.center = choice->center;
      outcome.selected_subgroup = chosen;
      break;
    }
  }

  const bool sign_reports = IsKnownVariance(plan.config.protocol);
  const ReportKind kind = sign_reports ? ReportKind::kSign : ReportKind::kReal;
  std::vector<SignReport> signs;
  double sum = 0.0;
  int64_t used = 0;
  for (const ReportRecord& r : records) {
    std::optional<int> g = plan.SubgroupOf(r.user);
    if (!g.has_value()) continue;
    if (absl::Status s = CheckRecord(r, kind, plan.SubgroupTag(*g)); !s.ok()) {
      return s;
    }
    if (*g != chosen) continue;
    ++used;
    if (sign_reports) {
      signs.push_back({r.user, *g, static_cast<int>(r.value)});
    } else {
      sum += r.value;
    }
  }
  outcome.aggregated_reports = used;

  if (sign_reports) {
    absl::StatusOr<SignHistogram> hist = KvAgg2(eps, plan.k2, signs);
    if (!hist.ok()) return hist.status();
    absl::StatusOr<double> refined = RefineKnownSigma(
        *hist, plan.k2, outcome.center, plan.known_sigma());
    if (!refined.ok()) return refined.status();
    outcome.mu_hat2 = *refined;
    return outcome;
  }
  if (used != plan.k2) {
    return absl::FailedPreconditionError(absl::StrCat(
        "got ", used, " real reports, expected ", plan.k2));
  }
  const double mean = sum / static_cast<double>(plan.k2);
  outcome.mu_hat2 = plan.config.protocol == ProtocolId::kUvOneRound
                        ? outcome.center + mean
                        : mean;
  return outcome;
}

absl::StatusOr<ProtocolRun> RunKvTwoRound(const ProtocolConfig& config,
                                          UserPool& users) {
  if (absl::Status s = CheckMode(config, ProtocolId::kKvTwoRound); !s.ok()) {
    return s;
  }
  absl::StatusOr<PartitionPlan> plan = PlanPartition(config);
  if (!plan.ok()) return plan.status();
  ProtocolRun run{*plan, {}, {}};
  run.transcript.Add(ParametersBroadcast(config));

  if (absl::Status s = CollectRoundOne(run.plan, users, run.transcript);
      !s.ok()) {
    return s;
  }
  const std::vector<ReportRecord> round_one = ReportsOfRound(run.transcript, 1);
  absl::StatusOr<RoundOneEstimate> first = AnalyzeRoundOne(run.plan, round_one);
  if (!first.ok()) return first.status();
  const double mu_hat1 = first->mean.mu_hat1;
  run.transcript.Add(BroadcastRecord{2, {}}.Add("mu_hat1", mu_hat1));

  const double sigma = run.plan.known_sigma();
  for (UserId u = run.plan.half(); u < run.plan.half() + run.plan.k2; ++u) {
    absl::StatusOr<SignReport> report =
        users.KvRr2(u, config.eps, mu_hat1, sigma);
    if (!report.ok()) return report.status();
    run.transcript.Add(ToRecord(2, *report, run.plan.SubgroupTag(0)));
  }
  const std::vector<ReportRecord> round_two = ReportsOfRound(run.transcript, 2);
  absl::StatusOr<EstimateOutcome> outcome =
      FinishEstimate(run.plan, *first, round_two);
  if (!outcome.ok()) return outcome.status();
  run.outcome = *std::move(outcome);
  run.transcript.Add(EstimateBroadcast(3, run.outcome));
  return run;
}

absl::StatusOr<ProtocolRun> RunKvOneRound(const ProtocolConfig& config,
                                          UserPool& users) {
  if (absl::Status s = CheckMode(config, ProtocolId::kKvOneRound); !s.ok()) {
    return s;
  }
  absl::StatusOr<PartitionPlan> plan = PlanPartition(config);
  if (!plan.ok()) return plan.status();
  ProtocolRun run{*plan, {}, {}};
  run.transcript.Add(ParametersBroadcast(config));

  // Every user answers before the analyst looks at anything.
  if (absl::Status s = CollectRoundOne(run.plan, users, run.transcript);
      !s.ok()) {
    return s;
  }
  const double sigma = run.plan.known_sigma();
  for (int g = 0; g < run.plan.num_subgroups; ++g) {
    const LatticeSpec lattice = run.plan.SubgroupLattice(g);
    const std::string tag = run.plan.SubgroupTag(g);
    const UserId begin = run.plan.SubgroupBegin(g);
    for (UserId u = begin; u < begin + run.plan.k2; ++u) {
      absl::StatusOr<SignReport> report =
          users.OneRoundKvRr2(u, config.eps, lattice, sigma, g);
      if (!report.ok()) return report.status();
      run.transcript.Add(ToRecord(1, *report, tag));
    }
  }

  const std::vector<ReportRecord> reports = ReportsOfRound(run.transcript, 1);
  absl::StatusOr<RoundOneEstimate> first = AnalyzeRoundOne(run.plan, reports);
  if (!first.ok()) return first.status();
  absl::StatusOr<EstimateOutcome> outcome =
      FinishEstimate(run.plan, *first, reports);
  if (!outcome.ok()) return outcome.status();
  run.outcome = *std::move(outcome);
  run.transcript.Add(EstimateBroadcast(2, run.outcome));
  return run;
}

absl::StatusOr<ProtocolRun> RunUvTwoRound(const ProtocolConfig& config,
                                          UserPool& users) {
  if (absl::Status s = CheckMode(config, ProtocolId::kUvTwoRound); !s.ok()) {
    return s;
  }
  absl::StatusOr<PartitionPlan> plan = PlanPartition(config);
  if (!plan.ok()) return plan.status();
  ProtocolRun run{*plan, {}, {}};
  run.transcript.Add(ParametersBroadcast(config));

  if (absl::Status s = CollectRoundOne(run.plan, users, run.transcript);
      !s.ok()) {
    return s;
  }
  const std::vector<ReportRecord> round_one = ReportsOfRound(run.transcript, 1);
  absl::StatusOr<RoundOneEstimate> first = AnalyzeRoundOne(run.plan, round_one);
  if (!first.ok()) return first.status();
  const auto [lo, hi] =
      UvInterval(run.plan, first->mean.mu_hat1, first->variance->sigma_hat);
  run.transcript.Add(
      BroadcastRecord{2, {}}.Add("interval_lo", lo).Add("interval_hi", hi));

  for (UserId u = run.plan.half(); u < run.plan.half() + run.plan.k2; ++u) {
    absl::StatusOr<RealReport> report = users.UvRr2(u, config.eps, lo, hi);
    if (!report.ok()) return report.status();
    run.transcript.Add(ToRecord(2, *report, run.plan.SubgroupTag(0)));
  }
  const std::vector<ReportRecord> round_two = ReportsOfRound(run.transcript, 2);
  absl::StatusOr<EstimateOutcome> outcome =
      FinishEstimate(run.plan, *first, round_two);
  if (!outcome.ok()) return outcome.status();
  run.outcome = *std::move(outcome);
  run.transcript.Add(EstimateBroadcast(3, run.outcome));
  return run;
}

absl::StatusOr<ProtocolRun> RunUvOneRound(const ProtocolConfig& config,
                                          UserPool& users) {
  if (absl::Status s = CheckMode(config, ProtocolId::kUvOneRound); !s.ok()) {
    return s;
  }
  absl::StatusOr<PartitionPlan> plan = PlanPartition(config);
  if (!plan.ok()) return plan.status();
  ProtocolRun run{*plan, {}, {}};
  run.transcript.Add(ParametersBroadcast(config));

  if (absl::Status s = CollectRoundOne(run.plan, users, run.transcript);
      !s.ok()) {
    return s;
  }
  for (int g = 0; g < run.plan.num_subgroups; ++g) {
    const LevelOffset subgroup = run.plan.UvSubgroup(g);
    const LatticeSpec lattice = run.plan.SubgroupLattice(g);
    const double noise_numerator =
        2.0 * run.plan.rho * std::ldexp(1.0, subgroup.level);
    const std::string tag = run.plan.SubgroupTag(g);
    const UserId begin = run.plan.SubgroupBegin(g);
    for (UserId u = begin; u < begin + run.plan.k2; ++u) {
      absl::StatusOr<RealReport> report = users.OneRoundUvRr2(
          u, config.eps, lattice, noise_numerator, subgroup);
      if (!report.ok()) return report.status();
      run.transcript.Add(ToRecord(1, *report, tag));
    }
  }

  const std::vector<ReportRecord> reports = ReportsOfRound(run.transcript, 1);
  absl::StatusOr<RoundOneEstimate> first = AnalyzeRoundOne(run.plan, reports);
  if (!first.ok()) return first.status();
  absl::StatusOr<EstimateOutcome> outcome =
      FinishEstimate(run.plan, *first, reports);
  if (!outcome.ok()) return outcome.status();
  run.outcome = *std::move(outcome);
  run.transcript.Add(EstimateBroadcast(2, run.outcome));
  return run;
}

absl::StatusOr<ProtocolRun> RunProtocol(const ProtocolConfig& config,
                                        UserPool& users) {
  if (users.size() != config.n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "population has ", users.size(), " users, config says ", config.n));
  }
  switch (config.protocol) {
    case ProtocolId::kKvTwoRound:
      return RunKvTwoRound(config, users);
    case ProtocolId::kKvOneRound:
      return RunKvOneRound(config, users);
    case ProtocolId::kUvTwoRound:
      return RunUvTwoRound(config, users);
    case ProtocolId::kUvOneRound:
      return RunUvOneRound(config, users);
  }
  return absl::InternalError("unknown protocol");
}

BroadcastRecord ParametersBroadcast(const ProtocolConfig& config) {
  BroadcastRecord b{0, {}};
  b.Add("protocol", std::string(ProtocolName(config.protocol)));
  if (std::isinf(config.eps)) {
    b.Add("eps", std::string("inf"));
  } else {
    b.Add("eps", config.eps);
  }
  b.Add("beta", config.beta);
  b.Add("n", config.n);
  if (const auto* known = std::get_if<KnownSigma>(&config.variance_mode)) {
    b.Add("sigma", known->sigma);
  } else {
    const auto& bounded = std::get<BoundedSigma>(config.variance_mode);
    b.Add("sigma_min", bounded.sigma_min);
    b.Add("sigma_max", bounded.sigma_max);
  }
  if (config.overrides.k.has_value()) b.Add("k", *config.overrides.k);
  if (config.overrides.k1.has_value()) b.Add("k1", *config.overrides.k1);
  if (config.overrides.k2.has_value()) b.Add("k2", *config.overrides.k2);
  b.Add("c_k", config.c_k);
  b.Add("paper_constants", int64_t{config.paper_constants ? 1 : 0});
  return b;
}

absl::StatusOr<ProtocolConfig> ConfigFromBroadcast(const BroadcastRecord& b) {
  ProtocolConfig config;
  std::optional<std::string> name = b.Text("protocol");
  if (!name.has_value()) {
    return absl::DataLossError("parameter broadcast lacks a protocol");
  }
  absl::StatusOr<ProtocolId> id = ParseProtocol(*name);
  if (!id.ok()) return absl::DataLossError(id.status().message());
  config.protocol = *id;
  if (std::optional<std::string> eps = b.Text("eps"); eps == "inf") {
    config.eps = std::numeric_limits<double>::infinity();
  } else if (std::optional<double> e = b.Number("eps"); e.has_value()) {
    config.eps = *e;
  } else {
    return absl::DataLossError("parameter broadcast lacks eps");
  }
  std::optional<double> beta = b.Number("beta");
  std::optional<double> n = b.Number("n");
  if (!beta.has_value() || !n.has_value()) {
    return absl::DataLossError("parameter broadcast lacks beta or n");
  }
  config.beta = *beta;
  config.n = static_cast<int64_t>(*n);
  if (std::optional<double> sigma = b.Number("sigma"); sigma.has_value()) {
    config.variance_mode = KnownSigma{*sigma};
  } else {
    std::optional<double> lo = b.Number("sigma_min");
    std::optional<double> hi = b.Number("sigma_max");
    if (!lo.has_value() || !hi.has_value()) {
      return absl::DataLossError("parameter broadcast lacks sigma");
    }
    config.variance_mode = BoundedSigma{*lo, *hi};
  }
  auto size = [&](absl::string_view key) -> std::optional<int64_t> {
    std::optional<double> v = b.Number(key);
    if (!v.has_value()) return std::nullopt;
    return static_cast<int64_t>(*v);
  };
  config.overrides = {size("k"), size("k1"), size("k2")};
  config.c_k = b.Number("c_k").value_or(8.0);
  config.paper_constants = b.Number("paper_constants").value_or(0.0) != 0.0;
  return config;
}

absl::StatusOr<ReplayResult> Replay(
    const Transcript& transcript,
    const std::optional<ProtocolConfig>& config) {
  const std::vector<BroadcastRecord> broadcasts = transcript.Broadcasts();
  ProtocolConfig resolved;
  if (config.has_value()) {
    resolved = *config;
  } else {
    auto params = std::find_if(
        broadcasts.begin(), broadcasts.end(),
        [](const BroadcastRecord& b) { return b.round == 0; });
    if (params == broadcasts.end()) {
      return absl::DataLossError("transcript has no parameter broadcast");
    }
    absl::StatusOr<ProtocolConfig> parsed = ConfigFromBroadcast(*params);
    if (!parsed.ok()) return parsed.status();
    resolved = *parsed;
  }
  absl::StatusOr<PartitionPlan> plan = PlanPartition(resolved);
  if (!plan.ok()) return plan.status();
  if (absl::Status s = transcript.CheckSequentialInteractivity(); !s.ok()) {
    return s;
  }

  // Every report must come from a queried group in the round it belongs to.
  const bool one_round = IsOneRound(resolved.protocol);
  for (const ReportRecord& r : transcript.Reports()) {
    int expected_round;
    if (plan->LevelOf(r.user).has_value()) {
      expected_round = 1;
    } else if (plan->SubgroupOf(r.user).has_value()) {
      expected_round = one_round ? 1 : 2;
    } else {
      return MalformedRecord(r, "user was never queried");
    }
    if (r.round != expected_round) {
      return MalformedRecord(r, absl::StrCat("sent in round ", r.round,
                                             ", expected ", expected_round));
    }
  }

  const std::vector<ReportRecord> round_one = ReportsOfRound(transcript, 1);
  absl::StatusOr<RoundOneEstimate> first = AnalyzeRoundOne(*plan, round_one);
  if (!first.ok()) return first.status();
  absl::StatusOr<EstimateOutcome> outcome = FinishEstimate(
      *plan, *first, one_round ? round_one : ReportsOfRound(transcript, 2));
  if (!outcome.ok()) return outcome.status();

  ReplayResult result{*outcome, true, ""};
  auto compare = [&](absl::string_view name, std::optional<double> recorded,
                     double recomputed) -> absl::Status {
    if (!recorded.has_value()) {
      return absl::DataLossError(
          absl::StrCat("transcript does not record ", name));
    }
    if (result.matches && !SameValue(*recorded, recomputed)) {
      result.matches = false;
      result.divergence =
          absl::StrCat(name, ": recorded ", FormatNumber(*recorded),
                       ", recomputed ", FormatNumber(recomputed));
    }
    return absl::OkStatus();
  };

  if (!one_round) {
    auto query = std::find_if(
        broadcasts.begin(), broadcasts.end(), [](const BroadcastRecord& b) {
          return b.round == 2 && b.Find("mu_hat2") == nullptr;
        });
    if (query == broadcasts.end()) {
      return absl::DataLossError("transcript has no round-2 broadcast");
    }
    if (IsKnownVariance(resolved.protocol)) {
      if (absl::Status s =
              compare("mu_hat1 broadcast", query->Number("mu_hat1"),
                      first->mean.mu_hat1);
          !s.ok()) {
        return s;
      }
    } else {
      const auto [lo, hi] = UvInterval(*plan, first->mean.mu_hat1,
                                       first->variance->sigma_hat);
      if (absl::Status s = compare("interval_lo broadcast",
                                   query->Number("interval_lo"), lo);
          !s.ok()) {
        return s;
      }
      if (absl::Status s = compare("interval_hi broadcast",
                                   query->Number("interval_hi"), hi);
          !s.ok()) {
        return s;
      }
    }
  }

  auto estimate = std::find_if(
      broadcasts.rbegin(), broadcasts.rend(),
      [](const BroadcastRecord& b) { return b.Find("mu_hat2") != nullptr; });
  if (estimate == broadcasts.rend()) {
    return absl::DataLossError("transcript does not record the estimate");
  }
  if (absl::Status s =
          compare("mu_hat1", estimate->Number("mu_hat1"), outcome->mu_hat1);
      !s.ok()) {
    return s;
  }
  if (outcome->sigma_hat.has_value()) {
    if (absl::Status s = compare("sigma_hat", estimate->Number("sigma_hat"),
                                 *outcome->sigma_hat);
        !s.ok()) {
      return s;
    }
  }
  if (absl::Status s =
          compare("mu_hat2", estimate->Number("mu_hat2"), outcome->mu_hat2);
      !s.ok()) {
    return s;
  }
  return result;
}

}  // namespace gausstimate
