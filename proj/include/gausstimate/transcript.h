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

// Replayable record of one protocol execution: every user report in the order
// it was sent, interleaved with the analyst's public broadcasts.
//
// Wire format, one JSON object per line:
//   {"round":1,"user":17,"subgroup":"L3","kind":"quad","value":2}
//   {"round":2,"broadcast":{"mu_hat1":10}}
// Numbers are written with printf("%.17g"), so a transcript round-trips
// bit-exactly and is byte-stable across platforms.

#ifndef GAUSSTIMATE_TRANSCRIPT_H_
#define GAUSSTIMATE_TRANSCRIPT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "gausstimate/randomizers.h"

namespace gausstimate {

enum class ReportKind { kQuad, kSign, kReal };

absl::string_view ReportKindName(ReportKind kind);

struct ReportRecord {
  int round = 1;
  UserId user = 0;
  std::string subgroup;
  ReportKind kind = ReportKind::kQuad;
  double value = 0.0;
};

using BroadcastValue = std::variant<int64_t, double, std::string>;

struct BroadcastRecord {
  int round = 0;
  std::vector<std::pair<std::string, BroadcastValue>> fields;

  BroadcastRecord& Add(std::string key, BroadcastValue value);
  const BroadcastValue* Find(absl::string_view key) const;
  // Integer or floating field as a double.
  std::optional<double> Number(absl::string_view key) const;
  std::optional<std::string> Text(absl::string_view key) const;
};

using TranscriptEntry = std::variant<ReportRecord, BroadcastRecord>;

class Transcript {
 public:
  void Add(ReportRecord record) { entries_.emplace_back(std::move(record)); }
  void Add(BroadcastRecord record) { entries_.emplace_back(std::move(record)); }

  const std::vector<TranscriptEntry>& entries() const { return entries_; }

  std::vector<ReportRecord> Reports() const;
  std::vector<BroadcastRecord> Broadcasts() const;
  int64_t report_count() const;
  // Largest round index among reports (0 when there are none).
  int rounds() const;

  // Each user sends at most one message.
  absl::Status CheckSequentialInteractivity() const;

  std::string Serialize() const;
  static absl::StatusOr<Transcript> Parse(absl::string_view text);

 private:
  std::vector<TranscriptEntry> entries_;
};

// printf("%.17g"); "nan", "inf" and "-inf" for non-finite values.
std::string FormatNumber(double value);

}  // namespace gausstimate

#endif  // GAUSSTIMATE_TRANSCRIPT_H_
