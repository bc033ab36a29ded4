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

// Monte Carlo experiments, privacy audits and result tables.

#ifndef GAUSSTIMATE_HARNESS_H_
#define GAUSSTIMATE_HARNESS_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "gausstimate/protocols.h"
#include "gausstimate/randomizers.h"

namespace gausstimate {

// Ground truth of a simulated population. Only the harness reads it; protocol
// code sees PrivateValue handles and public configuration.
class SimulationTruth {
 public:
  SimulationTruth(double mu, double sigma) : mu_(mu), sigma_(sigma) {}

  // n i.i.d. N(mu, sigma^2) samples. User i draws from its own data stream.
  absl::StatusOr<std::vector<PrivateValue>> Draw(int64_t n,
                                                 uint64_t master_seed,
                                                 uint64_t trial_key) const;

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }

 private:
  double mu_;
  double sigma_;
};

// Key shared by every stream of one (cell, trial) pair.
uint64_t TrialKey(uint64_t cell_index, uint64_t trial);

struct ExperimentCell {
  int64_t n = 0;
  double eps = 1.0;
  double mu = 0.0;
  double sigma = 1.0;
};

struct ExperimentSpec {
  // Protocol, beta, sigma bounds (unknown variance) and overrides. n, eps and
  // the known sigma are taken from the grid.
  ProtocolConfig base;
  std::vector<int64_t> n_grid;
  std::vector<double> eps_grid;
  std::vector<double> mu_grid;
  std::vector<double> sigma_grid;
  int trials = 1;
  uint64_t master_seed = 0;
  int workers = 1;
  bool record_timing = false;
};

// Cells in row-major order over (n, eps, mu, sigma).
std::vector<ExperimentCell> ExpandGrid(const ExperimentSpec& spec);

// Protocol configuration of one cell.
ProtocolConfig CellConfig(const ExperimentSpec& spec,
                          const ExperimentCell& cell);

absl::Status ValidateSpec(const ExperimentSpec& spec);

struct ErrorSummary {
  double p50 = 0.0;
  double p90 = 0.0;
  double p95 = 0.0;
  double mean = 0.0;
};

// Nearest-rank quantiles.
absl::StatusOr<ErrorSummary> SummarizeErrors(std::span<const double> errors);

struct TrialRecord {
  int trial = 0;
  double mu_hat1 = 0.0;
  std::optional<double> sigma_hat;
  double mu_hat2 = 0.0;
  double abs_error = 0.0;
  std::optional<double> wall_ms;
};

struct CellStats {
  ExperimentCell cell;
  PartitionPlan plan;
  std::vector<TrialRecord> trials;  // in trial order
  std::vector<double> errors;       // |mu_hat2 - mu| in trial order
  ErrorSummary summary;
  double mu1_coverage = 0.0;  // share of trials with |mu_hat1 - mu| <= 2 sigma
  std::optional<double> sigma_coverage;  // share with sigma_hat in [sigma, 8 sigma]
  std::optional<double> mean_wall_ms;
};

struct TrialStats {
  ProtocolId protocol = ProtocolId::kKvTwoRound;
  std::vector<CellStats> cells;
  std::vector<std::string> warnings;
};

// One protocol execution on a fresh population.
absl::StatusOr<ProtocolRun> RunSingleTrial(const ProtocolConfig& config,
                                           const SimulationTruth& truth,
                                           uint64_t master_seed,
                                           uint64_t cell_index, int trial);

absl::StatusOr<TrialStats> RunTrials(const ExperimentSpec& spec);

// Least-squares slope of log(y) against log(x). Absent with fewer than two
// distinct x values or a nonpositive coordinate.
std::optional<double> LogLogSlope(
    std::span<const std::pair<double, double>> points);

// Slope of median error against n for the cells sharing (eps, mu, sigma)
// with `cell_index`.
std::optional<double> CellSlope(const TrialStats& stats, size_t cell_index);

std::string ResultsTable(const TrialStats& stats);
std::string SummaryTable(const TrialStats& stats);

// Privacy audits. All laws are evaluated in closed form.

enum class DiscreteRandomizer { kRr1, kKvRr2, kOneRoundKvRr2 };

struct DiscreteAuditParams {
  int level = 0;          // rr1
  double center = 0.0;    // kv_rr2
  LatticeSpec lattice;    // one_round_kv_rr2
};

// Output distribution of a randomizer as a function of its input.
using DiscreteLaw = std::function<std::vector<double>(double x)>;

DiscreteLaw MakeDiscreteLaw(DiscreteRandomizer randomizer, double eps,
                            const DiscreteAuditParams& params);

struct DiscreteAudit {
  double max_ratio = 1.0;  // +inf if some output is possible for one input only
  double x = 0.0;
  double x_prime = 0.0;
  int output = 0;
};

DiscreteAudit AuditDiscreteLaw(const DiscreteLaw& law,
                               std::span<const double> input_grid);

double AuditPrivacyDiscrete(DiscreteRandomizer randomizer, double eps,
                            std::span<const double> input_grid,
                            const DiscreteAuditParams& params);

struct LaplaceAudit {
  double max_log_ratio = 0.0;
  double x = 0.0;
  double x_prime = 0.0;
  double y = 0.0;
};

// Mechanism f(x) + Laplace(scale): the largest log density ratio
// (|y - f(x')| - |y - f(x)|) / scale over the pairs and output points.
LaplaceAudit AuditLaplaceMechanism(
    const std::function<double(double)>& f, double scale,
    std::span<const std::pair<double, double>> x_pairs,
    std::span<const double> y_grid);

// uv_rr2 on the interval [lo, hi].
LaplaceAudit AuditPrivacyLaplace(
    double eps, double lo, double hi,
    std::span<const std::pair<double, double>> x_pairs,
    std::span<const double> y_grid);

// one_round_uv_rr2 for subgroup (level, offset_index) with the given rho.
LaplaceAudit AuditPrivacyOneRoundLaplace(
    double eps, LevelOffset subgroup, int rho,
    std::span<const std::pair<double, double>> x_pairs,
    std::span<const double> y_grid);

const char* DiscreteRandomizerName(DiscreteRandomizer randomizer);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_HARNESS_H_
