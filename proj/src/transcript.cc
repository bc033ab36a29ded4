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

#include "gausstimate/transcript.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/string_view.h"
#include "json.hpp"

namespace gausstimate {
namespace {

using json = nlohmann::ordered_json;

std::optional<ReportKind> ParseKind(absl::string_view name) {
  if (name == "quad") return ReportKind::kQuad;
  if (name == "sign") return ReportKind::kSign;
  if (name == "real") return ReportKind::kReal;
  return std::nullopt;
}

void AppendValue(std::string& out, const BroadcastValue& value) {
  if (const auto* i = std::get_if<int64_t>(&value)) {
    absl::StrAppend(&out, *i);
  } else if (const auto* d = std::get_if<double>(&value)) {
    out += FormatNumber(*d);
  } else {
    out += json(std::get<std::string>(value)).dump();
  }
}

absl::Status Malformed(int line, absl::string_view what) {
  return absl::DataLossError(absl::StrCat("transcript line ", line, ": ", what));
}

absl::StatusOr<ReportRecord> ParseReport(const json& obj, int line) {
  ReportRecord r;
  if (!obj.contains("round") || !obj["round"].is_number_integer() ||
      !obj["user"].is_number_integer() || !obj.contains("subgroup") ||
      !obj["subgroup"].is_string() || !obj.contains("kind") ||
      !obj["kind"].is_string() || !obj.contains("value") ||
      !obj["value"].is_number()) {
    return Malformed(line, "report needs round, user, subgroup, kind, value");
  }
  r.round = obj["round"].get<int>();
  r.user = obj["user"].get<int64_t>();
  r.subgroup = obj["subgroup"].get<std::string>();
  std::optional<ReportKind> kind = ParseKind(obj["kind"].get<std::string>());
  if (!kind.has_value()) return Malformed(line, "unknown report kind");
  r.kind = *kind;
  r.value = obj["value"].get<double>();
  if (!std::isfinite(r.value)) return Malformed(line, "non-finite value");
  if (r.kind != ReportKind::kReal && r.value != std::floor(r.value)) {
    return Malformed(line, "discrete report with fractional value");
  }
  return r;
}

absl::StatusOr<BroadcastRecord> ParseBroadcast(const json& obj, int line) {
  if (!obj.contains("round") || !obj["round"].is_number_integer() ||
      !obj["broadcast"].is_object()) {
    return Malformed(line, "broadcast needs round and an object payload");
  }
  BroadcastRecord b;
  b.round = obj["round"].get<int>();
  for (const auto& [key, value] : obj["broadcast"].items()) {
    if (value.is_number_integer()) {
      b.Add(key, value.get<int64_t>());
    } else if (value.is_number()) {
      b.Add(key, value.get<double>());
    } else if (value.is_string()) {
      b.Add(key, value.get<std::string>());
    } else {
      return Malformed(line, absl::StrCat("unsupported value for ", key));
    }
  }
  return b;
}

}  // namespace

absl::string_view ReportKindName(ReportKind kind) {
  switch (kind) {
    case ReportKind::kQuad:
      return "quad";
    case ReportKind::kSign:
      return "sign";
    case ReportKind::kReal:
      return "real";
  }
  return "unknown";
}

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return absl::StrFormat("%.17g", value);
}

BroadcastRecord& BroadcastRecord::Add(std::string key, BroadcastValue value) {
  fields.emplace_back(std::move(key), std::move(value));
  return *this;
}

const BroadcastValue* BroadcastRecord::Find(absl::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::optional<double> BroadcastRecord::Number(absl::string_view key) const {
  const BroadcastValue* v = Find(key);
  if (v == nullptr) return std::nullopt;
  if (const auto* i = std::get_if<int64_t>(v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(v)) return *d;
  return std::nullopt;
}

std::optional<std::string> BroadcastRecord::Text(absl::string_view key) const {
  const BroadcastValue* v = Find(key);
  if (v == nullptr) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  return std::nullopt;
}

std::vector<ReportRecord> Transcript::Reports() const {
  std::vector<ReportRecord> out;
  for (const auto& e : entries_) {
    if (const auto* r = std::get_if<ReportRecord>(&e)) out.push_back(*r);
  }
  return out;
}

std::vector<BroadcastRecord> Transcript::Broadcasts() const {
  std::vector<BroadcastRecord> out;
  for (const auto& e : entries_) {
    if (const auto* b = std::get_if<BroadcastRecord>(&e)) out.push_back(*b);
  }
  return out;
}

int64_t Transcript::report_count() const {
  int64_t count = 0;
  for (const auto& e : entries_) count += std::holds_alternative<ReportRecord>(e);
  return count;
}

int Transcript::rounds() const {
  int rounds = 0;
  for (const auto& e : entries_) {
    if (const auto* r = std::get_if<ReportRecord>(&e)) {
      rounds = std::max(rounds, r->round);
    }
  }
  return rounds;
}

absl::Status Transcript::CheckSequentialInteractivity() const {
  std::unordered_set<UserId> seen;
  for (const auto& e : entries_) {
    const auto* r = std::get_if<ReportRecord>(&e);
    if (r == nullptr) continue;
    if (!seen.insert(r->user).second) {
      return absl::FailedPreconditionError(
          absl::StrCat("user ", r->user, " sent more than one message"));
    }
  }
  return absl::OkStatus();
}

std::string Transcript::Serialize() const {
  std::string out;
  for (const auto& e : entries_) {
    if (const auto* r = std::get_if<ReportRecord>(&e)) {
      absl::StrAppend(&out, "{\"round\":", r->round, ",\"user\":", r->user,
                      ",\"subgroup\":", json(r->subgroup).dump(),
                      ",\"kind\":\"", ReportKindName(r->kind),
                      "\",\"value\":", FormatNumber(r->value), "}\n");
    } else {
      const auto& b = std::get<BroadcastRecord>(e);
      absl::StrAppend(&out, "{\"round\":", b.round, ",\"broadcast\":{");
      for (size_t i = 0; i < b.fields.size(); ++i) {
        if (i > 0) out += ',';
        out += json(b.fields[i].first).dump();
        out += ':';
        AppendValue(out, b.fields[i].second);
      }
      out += "}}\n";
    }
  }
  return out;
}

absl::StatusOr<Transcript> Transcript::Parse(absl::string_view text) {
  Transcript transcript;
  int line_number = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_number;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) {
      return Malformed(line_number, "not a JSON object");
    }
    if (obj.contains("broadcast")) {
      absl::StatusOr<BroadcastRecord> b = ParseBroadcast(obj, line_number);
      if (!b.ok()) return b.status();
      transcript.Add(*std::move(b));
    } else if (obj.contains("user")) {
      absl::StatusOr<ReportRecord> r = ParseReport(obj, line_number);
      if (!r.ok()) return r.status();
      transcript.Add(*std::move(r));
    } else {
      return Malformed(line_number, "neither a report nor a broadcast");
    }
  }
  return transcript;
}

}  // namespace gausstimate
