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

#include "gausstimate/harness.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "gausstimate/numerics.h"
#include "gausstimate/protocols.h"
#include "gausstimate/randomizers.h"
#include "gausstimate/transcript.h"

namespace gausstimate {
namespace {

std::string CellLabel(const ExperimentCell& c) {
  return absl::StrCat("cell (n=", c.n, ", eps=", FormatNumber(c.eps),
                      ", mu=", FormatNumber(c.mu),
                      ", sigma=", FormatNumber(c.sigma), ")");
}

absl::Status Annotate(const absl::Status& s, const ExperimentCell& c) {
  return absl::Status(s.code(), absl::StrCat(CellLabel(c), ": ", s.message()));
}

std::string Optional(const std::optional<double>& v) {
  return v.has_value() ? FormatNumber(*v) : "";
}

struct Job {
  size_t cell = 0;
  int trial = 0;
};

}  // namespace

absl::StatusOr<std::vector<PrivateValue>> SimulationTruth::Draw(
    int64_t n, uint64_t master_seed, uint64_t trial_key) const {
  std::vector<PrivateValue> samples;
  samples.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    RandomStream stream(master_seed,
                        DeriveStreamId(trial_key, static_cast<uint64_t>(i),
                                       StreamRole::kData));
    absl::StatusOr<double> x = SampleGaussian(stream, mu_, sigma_);
    if (!x.ok()) return x.status();
    samples.emplace_back(*x);
  }
  return samples;
}

uint64_t TrialKey(uint64_t cell_index, uint64_t trial) {
  return Mix64(Mix64(cell_index + 1) ^ trial);
}

std::vector<ExperimentCell> ExpandGrid(const ExperimentSpec& spec) {
  std::vector<ExperimentCell> cells;
  for (int64_t n : spec.n_grid) {
    for (double eps : spec.eps_grid) {
      for (double mu : spec.mu_grid) {
        for (double sigma : spec.sigma_grid) {
          cells.push_back({n, eps, mu, sigma});
        }
      }
    }
  }
  return cells;
}

ProtocolConfig CellConfig(const ExperimentSpec& spec,
                          const ExperimentCell& cell) {
  ProtocolConfig config = spec.base;
  config.n = cell.n;
  config.eps = cell.eps;
  if (IsKnownVariance(config.protocol)) {
    config.variance_mode = KnownSigma{cell.sigma};
  }
  return config;
}

absl::Status ValidateSpec(const ExperimentSpec& spec) {
  if (spec.trials < 1) {
    return absl::InvalidArgumentError("trials must be >= 1");
  }
  if (spec.workers < 1) {
    return absl::InvalidArgumentError("workers must be >= 1");
  }
  if (spec.n_grid.empty() || spec.eps_grid.empty() || spec.mu_grid.empty() ||
      spec.sigma_grid.empty()) {
    return absl::InvalidArgumentError("experiment grid is empty");
  }
  for (const ExperimentCell& cell : ExpandGrid(spec)) {
    if (!(cell.sigma > 0.0) || !std::isfinite(cell.mu)) {
      return Annotate(
          absl::InvalidArgumentError("true sigma must be positive and mu finite"),
          cell);
    }
    absl::StatusOr<PartitionPlan> plan = PlanPartition(CellConfig(spec, cell));
    if (!plan.ok()) return Annotate(plan.status(), cell);
  }
  return absl::OkStatus();
}

absl::StatusOr<ErrorSummary> SummarizeErrors(std::span<const double> errors) {
  if (errors.empty()) {
    return absl::InvalidArgumentError("cannot summarize an empty error list");
  }
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = [&](double q) {
    const auto r = static_cast<size_t>(std::ceil(q * n));
    return sorted[std::clamp<size_t>(r, 1, sorted.size()) - 1];
  };
  ErrorSummary s;
  s.p50 = rank(0.50);
  s.p90 = rank(0.90);
  s.p95 = rank(0.95);
  double total = 0.0;
  for (double e : errors) total += e;
  s.mean = total / n;
  return s;
}

absl::StatusOr<ProtocolRun> RunSingleTrial(const ProtocolConfig& config,
                                           const SimulationTruth& truth,
                                           uint64_t master_seed,
                                           uint64_t cell_index, int trial) {
  const uint64_t key = TrialKey(cell_index, static_cast<uint64_t>(trial));
  absl::StatusOr<std::vector<PrivateValue>> samples =
      truth.Draw(config.n, master_seed, key);
  if (!samples.ok()) return samples.status();
  UserPool users(*std::move(samples), master_seed, key);
  return RunProtocol(config, users);
}

absl::StatusOr<TrialStats> RunTrials(const ExperimentSpec& spec) {
  if (absl::Status s = ValidateSpec(spec); !s.ok()) return s;
  const std::vector<ExperimentCell> cells = ExpandGrid(spec);

  TrialStats stats;
  stats.protocol = spec.base.protocol;
  stats.cells.resize(cells.size());
  std::vector<Job> jobs;
  for (size_t c = 0; c < cells.size(); ++c) {
    CellStats& cs = stats.cells[c];
    cs.cell = cells[c];
    cs.plan = *PlanPartition(CellConfig(spec, cells[c]));
    cs.trials.resize(static_cast<size_t>(spec.trials));
    const double top = std::ldexp(1.0, cs.plan.levels.max);
    if (cells[c].mu < 0.0 || cells[c].mu > top) {
      stats.warnings.push_back(absl::StrCat(
          CellLabel(cells[c]), ": mu lies outside the searchable range [0, ",
          FormatNumber(top), "]; the estimate will not converge to it"));
    }
    for (int t = 0; t < spec.trials; ++t) jobs.push_back({c, t});
  }

  // Each job writes only its own slot, so the schedule cannot change results.
  std::vector<absl::Status> job_status(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const ExperimentCell& cell = cells[job.cell];
      const SimulationTruth truth(cell.mu, cell.sigma);
      const auto start = std::chrono::steady_clock::now();
      absl::StatusOr<ProtocolRun> run =
          RunSingleTrial(CellConfig(spec, cell), truth, spec.master_seed,
                         job.cell, job.trial);
      const auto stop = std::chrono::steady_clock::now();
      if (!run.ok()) {
        job_status[i] = Annotate(run.status(), cell);
        continue;
      }
      TrialRecord& rec = stats.cells[job.cell].trials[job.trial];
      rec.trial = job.trial;
      rec.mu_hat1 = run->outcome.mu_hat1;
      rec.sigma_hat = run->outcome.sigma_hat;
      rec.mu_hat2 = run->outcome.mu_hat2;
      rec.abs_error = std::abs(run->outcome.mu_hat2 - truth.mu());
      if (spec.record_timing) {
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(stop - start).count();
      }
    }
  };
  const int threads =
      std::min<int>(spec.workers, static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const absl::Status& s : job_status) {
    if (!s.ok()) return s;
  }

  for (CellStats& cs : stats.cells) {
    int mu_hits = 0;
    int sigma_hits = 0;
    double wall = 0.0;
    for (const TrialRecord& rec : cs.trials) {
      cs.errors.push_back(rec.abs_error);
      if (std::abs(rec.mu_hat1 - cs.cell.mu) <= 2.0 * cs.cell.sigma) ++mu_hits;
      if (rec.sigma_hat.has_value() && *rec.sigma_hat >= cs.cell.sigma &&
          *rec.sigma_hat <= 8.0 * cs.cell.sigma) {
        ++sigma_hits;
      }
      wall += rec.wall_ms.value_or(0.0);
    }
    const double trials = static_cast<double>(cs.trials.size());
    cs.summary = *SummarizeErrors(cs.errors);
    cs.mu1_coverage = mu_hits / trials;
    if (!IsKnownVariance(stats.protocol)) cs.sigma_coverage = sigma_hits / trials;
    if (spec.record_timing) cs.mean_wall_ms = wall / trials;
  }
  return stats;
}

std::optional<double> LogLogSlope(
    std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) return std::nullopt;
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) return std::nullopt;
    sx += std::log(x);
    sy += std::log(y);
  }
  const double m = static_cast<double>(points.size());
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (std::log(x) - mx) * (std::log(x) - mx);
    sxy += (std::log(x) - mx) * (std::log(y) - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

std::optional<double> CellSlope(const TrialStats& stats, size_t cell_index) {
  const ExperimentCell& ref = stats.cells[cell_index].cell;
  std::vector<std::pair<double, double>> points;
  for (const CellStats& cs : stats.cells) {
    if (cs.cell.eps == ref.eps && cs.cell.mu == ref.mu &&
        cs.cell.sigma == ref.sigma) {
      points.emplace_back(static_cast<double>(cs.cell.n), cs.summary.p50);
    }
  }
  return LogLogSlope(points);
}

std::string ResultsTable(const TrialStats& stats) {
  std::string out =
      "protocol,n,eps,mu,sigma,trial,mu_hat1,sigma_hat,mu_hat2,abs_error,"
      "wall_ms\n";
  const std::string name(ProtocolName(stats.protocol));
  for (const CellStats& cs : stats.cells) {
    for (const TrialRecord& rec : cs.trials) {
      absl::StrAppend(&out, name, ",", cs.cell.n, ",",
                      FormatNumber(cs.cell.eps), ",", FormatNumber(cs.cell.mu),
                      ",", FormatNumber(cs.cell.sigma), ",", rec.trial, ",",
                      FormatNumber(rec.mu_hat1), ",", Optional(rec.sigma_hat),
                      ",", FormatNumber(rec.mu_hat2), ",",
                      FormatNumber(rec.abs_error), ",", Optional(rec.wall_ms),
                      "\n");
    }
  }
  return out;
}

std::string SummaryTable(const TrialStats& stats) {
  std::string out =
      "protocol,n,eps,mu,sigma,trials,k1,level_min,level_max,k2,subgroups,"
      "median_error,p90_error,p95_error,mean_error,mu1_coverage,"
      "sigma_coverage,mean_wall_ms,slope\n";
  const std::string name(ProtocolName(stats.protocol));
  for (size_t i = 0; i < stats.cells.size(); ++i) {
    const CellStats& cs = stats.cells[i];
    absl::StrAppend(
        &out, name, ",", cs.cell.n, ",", FormatNumber(cs.cell.eps), ",",
        FormatNumber(cs.cell.mu), ",", FormatNumber(cs.cell.sigma), ",",
        cs.trials.size(), ",", cs.plan.k1, ",", cs.plan.levels.min, ",",
        cs.plan.levels.max, ",", cs.plan.k2, ",", cs.plan.num_subgroups, ",",
        FormatNumber(cs.summary.p50), ",", FormatNumber(cs.summary.p90), ",",
        FormatNumber(cs.summary.p95), ",", FormatNumber(cs.summary.mean), ",",
        FormatNumber(cs.mu1_coverage), ",", Optional(cs.sigma_coverage), ",",
        Optional(cs.mean_wall_ms), ",", Optional(CellSlope(stats, i)), "\n");
  }
  return out;
}

DiscreteLaw MakeDiscreteLaw(DiscreteRandomizer randomizer, double eps,
                            const DiscreteAuditParams& params) {
  switch (randomizer) {
    case DiscreteRandomizer::kRr1:
      return [eps, level = params.level](double x) {
        const std::array<double, 4> law = Rr1OutputLaw(eps, x, level);
        return std::vector<double>(law.begin(), law.end());
      };
    case DiscreteRandomizer::kKvRr2:
      return [eps, center = params.center](double x) {
        const std::array<double, 2> law = SignOutputLaw(eps, x, center);
        return std::vector<double>(law.begin(), law.end());
      };
    case DiscreteRandomizer::kOneRoundKvRr2:
      return [eps, lattice = params.lattice](double x) {
        const std::array<double, 2> law = OneRoundKvOutputLaw(eps, x, lattice);
        return std::vector<double>(law.begin(), law.end());
      };
  }
  return nullptr;
}

DiscreteAudit AuditDiscreteLaw(const DiscreteLaw& law,
                               std::span<const double> input_grid) {
  std::vector<std::vector<double>> laws;
  laws.reserve(input_grid.size());
  for (double x : input_grid) laws.push_back(law(x));
  DiscreteAudit audit;
  for (size_t i = 0; i < laws.size(); ++i) {
    for (size_t j = 0; j < laws.size(); ++j) {
      for (size_t y = 0; y < laws[i].size(); ++y) {
        const double num = laws[i][y];
        const double den = laws[j][y];
        if (num == 0.0) continue;
        const double ratio =
            den == 0.0 ? std::numeric_limits<double>::infinity() : num / den;
        if (ratio > audit.max_ratio) {
          audit = {ratio, input_grid[i], input_grid[j], static_cast<int>(y)};
        }
      }
    }
  }
  return audit;
}

double AuditPrivacyDiscrete(DiscreteRandomizer randomizer, double eps,
                            std::span<const double> input_grid,
                            const DiscreteAuditParams& params) {
  return AuditDiscreteLaw(MakeDiscreteLaw(randomizer, eps, params), input_grid)
      .max_ratio;
}

LaplaceAudit AuditLaplaceMechanism(
    const std::function<double(double)>& f, double scale,
    std::span<const std::pair<double, double>> x_pairs,
    std::span<const double> y_grid) {
  LaplaceAudit audit;
  for (const auto& [x, x_prime] : x_pairs) {
    const double fx = f(x);
    const double fx_prime = f(x_prime);
    for (double y : y_grid) {
      const double log_ratio =
          (std::abs(y - fx_prime) - std::abs(y - fx)) / scale;
      if (log_ratio > audit.max_log_ratio) {
        audit = {log_ratio, x, x_prime, y};
      }
    }
  }
  return audit;
}

LaplaceAudit AuditPrivacyLaplace(
    double eps, double lo, double hi,
    std::span<const std::pair<double, double>> x_pairs,
    std::span<const double> y_grid) {
  return AuditLaplaceMechanism(
      [lo, hi](double x) { return std::clamp(x, lo, hi); }, (hi - lo) / eps,
      x_pairs, y_grid);
}

LaplaceAudit AuditPrivacyOneRoundLaplace(
    double eps, LevelOffset subgroup, int rho,
    std::span<const std::pair<double, double>> x_pairs,
    std::span<const double> y_grid) {
  const LatticeSpec lattice = UvLattice(subgroup, rho);
  const double scale =
      2.0 * rho * std::ldexp(1.0, subgroup.level) / eps;
  return AuditLaplaceMechanism(
      [lattice](double x) { return x - lattice.Nearest(x); }, scale, x_pairs,
      y_grid);
}

const char* DiscreteRandomizerName(DiscreteRandomizer randomizer) {
  switch (randomizer) {
    case DiscreteRandomizer::kRr1:
      return "rr1";
    case DiscreteRandomizer::kKvRr2:
      return "kv_rr2";
    case DiscreteRandomizer::kOneRoundKvRr2:
      return "one_round_kv_rr2";
  }
  return "unknown";
}

}  // namespace gausstimate
