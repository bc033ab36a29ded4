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

#include "gausstimate/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/string_view.h"
#include "absl/strings/strip.h"
#include "gausstimate/harness.h"
#include "gausstimate/numerics.h"
#include "gausstimate/protocols.h"
#include "gausstimate/transcript.h"
#include "json.hpp"

namespace gausstimate {
namespace {

struct Options {
  std::string protocol;
  std::optional<int64_t> n;
  std::optional<double> eps;
  double beta = 0.05;
  double mu = 0.0;
  std::optional<double> sigma;
  std::optional<double> sigma_min;
  std::optional<double> sigma_max;
  std::optional<int64_t> k;
  std::optional<int64_t> k1;
  std::optional<int64_t> k2;
  double c_k = 8.0;
  bool paper_constants = false;
  int trials = 1;
  uint64_t seed = 0;
  std::string out_dir;
  std::string transcript;
  int workers = 0;
  bool timing = false;
  std::string n_grid;
  std::string eps_grid;
  std::string mu_grid;
  std::string sigma_grid;
  std::string eps_list;
  std::string config;
};

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kDataLoss:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kOutOfRange:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

int Fail(std::ostream& err, const absl::Status& status) {
  err << "error: " << status.message() << "\n";
  return ExitCodeFor(status);
}

// Accepts plain numbers, "ln3"-style natural logs and "b^e" powers.
absl::StatusOr<double> ParseReal(absl::string_view text) {
  double value = 0.0;
  if (absl::SimpleAtod(text, &value)) return value;
  if (absl::ConsumePrefix(&text, "ln") && absl::SimpleAtod(text, &value)) {
    return std::log(value);
  }
  std::vector<absl::string_view> parts = absl::StrSplit(text, '^');
  double base = 0.0;
  double exponent = 0.0;
  if (parts.size() == 2 && absl::SimpleAtod(parts[0], &base) &&
      absl::SimpleAtod(parts[1], &exponent)) {
    return std::pow(base, exponent);
  }
  return absl::InvalidArgumentError(absl::StrCat("not a number: \"", text, "\""));
}

absl::StatusOr<std::vector<double>> ParseRealList(absl::string_view text) {
  std::vector<double> values;
  for (absl::string_view item : absl::StrSplit(text, ',', absl::SkipEmpty())) {
    absl::StatusOr<double> v = ParseReal(absl::StripAsciiWhitespace(item));
    if (!v.ok()) return v.status();
    values.push_back(*v);
  }
  if (values.empty()) {
    return absl::InvalidArgumentError(absl::StrCat("empty list \"", text, "\""));
  }
  return values;
}

absl::StatusOr<std::vector<int64_t>> ParseSizeList(absl::string_view text) {
  absl::StatusOr<std::vector<double>> reals = ParseRealList(text);
  if (!reals.ok()) return reals.status();
  std::vector<int64_t> sizes;
  for (double v : *reals) {
    if (!(v >= 1.0 && v < 9.0e18) || v != std::floor(v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("not a population size: ", FormatNumber(v)));
    }
    sizes.push_back(static_cast<int64_t>(v));
  }
  return sizes;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  return std::string(std::istreambuf_iterator<char>(in), {});
}

absl::Status WriteFile(const std::filesystem::path& path,
                       const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("cannot write ", path.string()));
  }
  out << contents;
  out.close();
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("cannot write ", path.string()));
  }
  return absl::OkStatus();
}

// Flat JSON object {"n": 100000, "protocol": "kv2", ...} turned into flags.
absl::StatusOr<std::vector<std::string>> ConfigFileArgs(
    const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  nlohmann::ordered_json j =
      nlohmann::ordered_json::parse(*text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": expected a flat JSON object"));
  }
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else if (value.is_array()) {
      std::vector<std::string> items;
      for (const auto& item : value) {
        items.push_back(item.is_string() ? item.get<std::string>()
                                         : item.dump());
      }
      args.push_back(flag);
      args.push_back(absl::StrJoin(items, ","));
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": unsupported value for \"", key, "\""));
    }
  }
  return args;
}

void AddProtocolFlags(CLI::App* cmd, Options& o) {
  cmd->add_option("--protocol", o.protocol, "kv2 | kv1 | uv2 | uv1");
  cmd->add_option_function<std::string>(
      "--n",
      [&o](const std::string& text) {
        absl::StatusOr<std::vector<int64_t>> n = ParseSizeList(text);
        if (!n.ok() || n->size() != 1) {
          throw CLI::ValidationError("--n", "expected one size, e.g. 2^14");
        }
        o.n = n->front();
      },
      "number of users (even); accepts 2^14");
  cmd->add_option_function<std::string>(
      "--eps",
      [&o](const std::string& text) {
        absl::StatusOr<double> eps = ParseReal(text);
        if (!eps.ok()) {
          throw CLI::ValidationError("--eps",
                                     std::string(eps.status().message()));
        }
        o.eps = *eps;
      },
      "privacy parameter; accepts ln3 and inf");
  cmd->add_option("--beta", o.beta, "failure probability");
  cmd->add_option("--mu", o.mu, "true mean of the simulated data");
  cmd->add_option("--sigma", o.sigma,
                  "known sigma (kv*) or true sigma of the data (uv*)");
  cmd->add_option("--sigma-min", o.sigma_min, "lower sigma bound (uv*)");
  cmd->add_option("--sigma-max", o.sigma_max, "upper sigma bound (uv*)");
  cmd->add_option("--k", o.k, "round-one subgroup size");
  cmd->add_option("--k1", o.k1, "round-one subgroup size (uv*)");
  cmd->add_option("--k2", o.k2, "second-stage subgroup size (kv1, uv1)");
  cmd->add_option("--c-k", o.c_k, "constant of the default k");
  cmd->add_flag("--paper-constants", o.paper_constants,
                "size subgroups with the proof-grade constants");
  cmd->add_option("--config", o.config, "flat JSON file of flag values");
}

void AddRunFlags(CLI::App* cmd, Options& o) {
  cmd->add_option("--trials", o.trials, "trials per cell");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  cmd->add_flag("--timing", o.timing, "record wall-clock time per trial");
}

absl::StatusOr<ProtocolConfig> BuildConfig(const Options& o) {
  if (o.protocol.empty()) {
    return absl::InvalidArgumentError("--protocol is required");
  }
  absl::StatusOr<ProtocolId> id = ParseProtocol(o.protocol);
  if (!id.ok()) return id.status();
  ProtocolConfig config;
  config.protocol = *id;
  config.eps = o.eps.value_or(1.0);
  config.beta = o.beta;
  config.n = o.n.value_or(0);
  config.c_k = o.c_k;
  config.paper_constants = o.paper_constants;
  config.overrides = {o.k, o.k1, o.k2};
  if (IsKnownVariance(*id)) {
    if (o.sigma_min.has_value() || o.sigma_max.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat(o.protocol,
                       " assumes a known sigma; use --sigma, not "
                       "--sigma-min/--sigma-max"));
    }
    config.variance_mode = KnownSigma{o.sigma.value_or(1.0)};
  } else {
    if (!o.sigma_min.has_value() || !o.sigma_max.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat(o.protocol, " needs --sigma-min and --sigma-max"));
    }
    config.variance_mode = BoundedSigma{*o.sigma_min, *o.sigma_max};
  }
  return config;
}

std::filesystem::path OutputDir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env) {
    return env;
  }
  return ".";
}

int Workers(const Options& o) {
  if (o.workers > 0) return o.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

absl::Status WriteTables(const std::filesystem::path& dir,
                         const TrialStats& stats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
  }
  if (absl::Status s = WriteFile(dir / "results.csv", ResultsTable(stats));
      !s.ok()) {
    return s;
  }
  return WriteFile(dir / "summary.csv", SummaryTable(stats));
}

void PrintCell(std::ostream& out, const TrialStats& stats, size_t i) {
  const CellStats& cs = stats.cells[i];
  out << ProtocolName(stats.protocol) << " n=" << cs.cell.n
      << " eps=" << FormatNumber(cs.cell.eps)
      << " mu=" << FormatNumber(cs.cell.mu)
      << " sigma=" << FormatNumber(cs.cell.sigma)
      << " trials=" << cs.trials.size()
      << " median_error=" << FormatNumber(cs.summary.p50)
      << " p90_error=" << FormatNumber(cs.summary.p90)
      << " mu1_coverage=" << FormatNumber(cs.mu1_coverage);
  if (cs.sigma_coverage.has_value()) {
    out << " sigma_coverage=" << FormatNumber(*cs.sigma_coverage);
  }
  out << "\n";
}

int Simulate(const Options& o, std::ostream& out, std::ostream& err) {
  if (!o.n.has_value()) {
    return Fail(err, absl::InvalidArgumentError("--n is required"));
  }
  absl::StatusOr<ProtocolConfig> config = BuildConfig(o);
  if (!config.ok()) return Fail(err, config.status());
  ExperimentSpec spec;
  spec.base = *config;
  spec.n_grid = {config->n};
  spec.eps_grid = {config->eps};
  spec.mu_grid = {o.mu};
  spec.sigma_grid = {o.sigma.value_or(1.0)};
  spec.trials = o.trials;
  spec.master_seed = o.seed;
  spec.workers = Workers(o);
  spec.record_timing = o.timing;
  absl::StatusOr<TrialStats> stats = RunTrials(spec);
  if (!stats.ok()) return Fail(err, stats.status());
  for (const std::string& w : stats->warnings) err << "warning: " << w << "\n";

  const std::filesystem::path dir = OutputDir(o);
  if (absl::Status s = WriteTables(dir, *stats); !s.ok()) return Fail(err, s);
  if (!o.transcript.empty()) {
    // Trial 0 of the single cell, recomputed from the same streams.
    const std::vector<ExperimentCell> cells = ExpandGrid(spec);
    absl::StatusOr<ProtocolRun> run =
        RunSingleTrial(CellConfig(spec, cells[0]),
                       SimulationTruth(cells[0].mu, cells[0].sigma),
                       spec.master_seed, 0, 0);
    if (!run.ok()) return Fail(err, run.status());
    if (absl::Status s = WriteFile(o.transcript, run->transcript.Serialize());
        !s.ok()) {
      return Fail(err, s);
    }
  }
  PrintCell(out, *stats, 0);
  out << "results: " << (dir / "results.csv").string() << "\n";
  return kExitOk;
}

int Sweep(const Options& o, std::ostream& out, std::ostream& err) {
  absl::StatusOr<ProtocolConfig> config = BuildConfig(o);
  if (!config.ok()) return Fail(err, config.status());
  ExperimentSpec spec;
  spec.base = *config;
  if (!o.n_grid.empty()) {
    absl::StatusOr<std::vector<int64_t>> grid = ParseSizeList(o.n_grid);
    if (!grid.ok()) return Fail(err, grid.status());
    spec.n_grid = *grid;
  } else if (o.n.has_value()) {
    spec.n_grid = {*o.n};
  } else {
    return Fail(err, absl::InvalidArgumentError("--n-grid or --n is required"));
  }
  auto real_grid = [&](const std::string& text, double fallback,
                       std::vector<double>& grid) -> absl::Status {
    if (text.empty()) {
      grid = {fallback};
      return absl::OkStatus();
    }
    absl::StatusOr<std::vector<double>> parsed = ParseRealList(text);
    if (!parsed.ok()) return parsed.status();
    grid = *parsed;
    return absl::OkStatus();
  };
  for (absl::Status s :
       {real_grid(o.eps_grid, config->eps, spec.eps_grid),
        real_grid(o.mu_grid, o.mu, spec.mu_grid),
        real_grid(o.sigma_grid, o.sigma.value_or(1.0), spec.sigma_grid)}) {
    if (!s.ok()) return Fail(err, s);
  }
  spec.trials = o.trials;
  spec.master_seed = o.seed;
  spec.workers = Workers(o);
  spec.record_timing = o.timing;
  absl::StatusOr<TrialStats> stats = RunTrials(spec);
  if (!stats.ok()) return Fail(err, stats.status());
  for (const std::string& w : stats->warnings) err << "warning: " << w << "\n";
  const std::filesystem::path dir = OutputDir(o);
  if (absl::Status s = WriteTables(dir, *stats); !s.ok()) return Fail(err, s);
  for (size_t i = 0; i < stats->cells.size(); ++i) PrintCell(out, *stats, i);
  for (size_t i = 0; i < stats->cells.size(); ++i) {
    // One slope line per (eps, mu, sigma) group, at its first cell.
    const ExperimentCell& c = stats->cells[i].cell;
    bool first = true;
    for (size_t j = 0; j < i; ++j) {
      const ExperimentCell& d = stats->cells[j].cell;
      if (d.eps == c.eps && d.mu == c.mu && d.sigma == c.sigma) first = false;
    }
    if (!first) continue;
    std::optional<double> slope = CellSlope(*stats, i);
    out << "slope eps=" << FormatNumber(c.eps) << " mu=" << FormatNumber(c.mu)
        << " sigma=" << FormatNumber(c.sigma) << ": "
        << (slope.has_value() ? FormatNumber(*slope) : "absent") << "\n";
  }
  out << "summary: " << (dir / "summary.csv").string() << "\n";
  return kExitOk;
}

DiscreteLaw AuditedRr1Law(double eps, int level) {
#ifdef GAUSSTIMATE_FAULTY_RR1
  (void)eps;
  return [level](double x) {
    std::vector<double> law(4, 0.0);
    law[FloorDivMod4(x, level)] = 1.0;
    return law;
  };
#else
  DiscreteAuditParams params;
  params.level = level;
  return MakeDiscreteLaw(DiscreteRandomizer::kRr1, eps, params);
#endif
}

std::vector<double> Grid(double lo, double hi, int points) {
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) {
    grid.push_back(lo + (hi - lo) * i / (points - 1));
  }
  return grid;
}

int Audit(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<double> eps_values = {0.1, 0.5, 1.0, 2.0, std::log(3.0)};
  if (!o.eps_list.empty()) {
    absl::StatusOr<std::vector<double>> parsed = ParseRealList(o.eps_list);
    if (!parsed.ok()) return Fail(err, parsed.status());
    eps_values = *parsed;
  }
  for (double eps : eps_values) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
      return Fail(err, absl::InvalidArgumentError(absl::StrCat(
                           "audit needs finite eps > 0, got ",
                           FormatNumber(eps))));
    }
  }

  const std::vector<double> inputs = Grid(-9.5, 9.5, 101);
  std::vector<std::pair<double, double>> pairs;
  for (double x : inputs) {
    for (double x_prime : inputs) pairs.emplace_back(x, x_prime);
  }
  const std::vector<double> outputs = Grid(-40.0, 40.0, 321);
  bool ok = true;

  auto report_discrete = [&](const char* name, double eps,
                             const DiscreteAudit& audit) {
    const double bound = std::exp(eps);
    const bool holds = audit.max_ratio <= bound * (1.0 + 1e-9);
    const bool tight = audit.max_ratio >= bound * (1.0 - 1e-9);
    out << "audit " << name << " eps=" << FormatNumber(eps)
        << " max_ratio=" << FormatNumber(audit.max_ratio)
        << " bound=" << FormatNumber(bound) << " "
        << (holds && tight ? "ok" : "FAIL") << "\n";
    if (!holds) {
      err << "violation: " << name << " eps=" << FormatNumber(eps)
          << " x=" << FormatNumber(audit.x)
          << " x'=" << FormatNumber(audit.x_prime)
          << " output=" << audit.output << "\n";
    } else if (!tight) {
      err << "not tight: " << name << " eps=" << FormatNumber(eps) << "\n";
    }
    ok = ok && holds && tight;
  };
  auto report_laplace = [&](const char* name, double eps,
                            const LaplaceAudit& audit) {
    const bool holds = audit.max_log_ratio <= eps + 1e-12;
    out << "audit " << name << " eps=" << FormatNumber(eps)
        << " max_log_ratio=" << FormatNumber(audit.max_log_ratio)
        << " bound=" << FormatNumber(eps) << " " << (holds ? "ok" : "FAIL")
        << "\n";
    if (!holds) {
      err << "violation: " << name << " eps=" << FormatNumber(eps)
          << " x=" << FormatNumber(audit.x)
          << " x'=" << FormatNumber(audit.x_prime)
          << " y=" << FormatNumber(audit.y) << "\n";
    }
    ok = ok && holds;
  };

  for (double eps : eps_values) {
    report_discrete("rr1", eps,
                    AuditDiscreteLaw(AuditedRr1Law(eps, 1), inputs));
    DiscreteAuditParams kv;
    kv.center = 0.25;
    report_discrete(
        "kv_rr2", eps,
        AuditDiscreteLaw(MakeDiscreteLaw(DiscreteRandomizer::kKvRr2, eps, kv),
                         inputs));
    DiscreteAuditParams one_round;
    one_round.lattice = {0.2, 8.0};
    report_discrete(
        "one_round_kv_rr2", eps,
        AuditDiscreteLaw(
            MakeDiscreteLaw(DiscreteRandomizer::kOneRoundKvRr2, eps, one_round),
            inputs));
    report_laplace("uv_rr2", eps,
                   AuditPrivacyLaplace(eps, -4.0, 6.0, pairs, outputs));
    report_laplace("one_round_uv_rr2", eps,
                   AuditPrivacyOneRoundLaplace(eps, {-1, 3}, 4, pairs,
                                               outputs));
  }
  return ok ? kExitOk : kExitFailure;
}

int ReplayCommand(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.transcript.empty()) {
    return Fail(err, absl::InvalidArgumentError("--transcript is required"));
  }
  absl::StatusOr<std::string> text = ReadFile(o.transcript);
  if (!text.ok()) return Fail(err, text.status());
  absl::StatusOr<Transcript> transcript = Transcript::Parse(*text);
  if (!transcript.ok()) return Fail(err, transcript.status());
  std::optional<ProtocolConfig> config;
  if (!o.protocol.empty()) {
    absl::StatusOr<ProtocolConfig> built = BuildConfig(o);
    if (!built.ok()) return Fail(err, built.status());
    config = *built;
  }
  absl::StatusOr<ReplayResult> result = Replay(*transcript, config);
  if (!result.ok()) return Fail(err, result.status());
  if (!result->matches) {
    err << "replay mismatch: " << result->divergence << "\n";
    return kExitFailure;
  }
  const EstimateOutcome& r = result->recomputed;
  out << "replay ok: " << ProtocolName(r.protocol)
      << " mu_hat1=" << FormatNumber(r.mu_hat1);
  if (r.sigma_hat.has_value()) {
    out << " sigma_hat=" << FormatNumber(*r.sigma_hat);
  }
  out << " mu_hat2=" << FormatNumber(r.mu_hat2) << "\n";
  return kExitOk;
}

// Splices the flags of a --config file in front of the command line flags, so
// that explicit flags take precedence.
absl::StatusOr<std::vector<std::string>> ExpandConfig(
    const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (absl::StartsWith(args[i], "--config=")) {
      path = args[i].substr(9);
    }
  }
  if (!path.has_value() || args.empty()) return args;
  absl::StatusOr<std::vector<std::string>> file_args = ConfigFileArgs(*path);
  if (!file_args.ok()) return file_args.status();
  std::vector<std::string> expanded = {args[0]};
  expanded.insert(expanded.end(), file_args->begin(), file_args->end());
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

}  // namespace

int RunCli(const std::vector<std::string>& raw_args, std::ostream& out,
           std::ostream& err) {
  absl::StatusOr<std::vector<std::string>> args = ExpandConfig(raw_args);
  if (!args.ok()) return Fail(err, args.status());

  Options o;
  CLI::App app("Locally private Gaussian mean estimation simulator",
               "gausstimate");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  CLI::App* simulate = app.add_subcommand("simulate", "run one grid cell");
  AddProtocolFlags(simulate, o);
  AddRunFlags(simulate, o);
  simulate->add_option("--transcript", o.transcript,
                       "write the transcript of trial 0 here");

  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid");
  AddProtocolFlags(sweep, o);
  AddRunFlags(sweep, o);
  sweep->add_option("--n-grid", o.n_grid, "e.g. 2^14,2^15,2^16");
  sweep->add_option("--eps-grid", o.eps_grid, "comma-separated eps values");
  sweep->add_option("--mu-grid", o.mu_grid, "comma-separated true means");
  sweep->add_option("--sigma-grid", o.sigma_grid, "comma-separated sigmas");

  CLI::App* audit = app.add_subcommand("audit", "exact privacy audit");
  audit->add_option("--eps", o.eps_list,
                    "comma-separated eps values (default 0.1,0.5,1,2,ln3)");

  CLI::App* replay =
      app.add_subcommand("replay", "recompute analyst outputs of a transcript");
  AddProtocolFlags(replay, o);
  replay->add_option("--transcript", o.transcript, "transcript file");

  std::vector<const char*> argv = {"gausstimate"};
  for (const std::string& a : *args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (simulate->parsed()) return Simulate(o, out, err);
  if (sweep->parsed()) return Sweep(o, out, err);
  if (audit->parsed()) return Audit(o, out, err);
  return ReplayCommand(o, out, err);
}

}  // namespace gausstimate
