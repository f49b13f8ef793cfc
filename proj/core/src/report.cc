// Copyright 2026 The Proxy Audit Authors
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

#include "proxy_audit/report.h"

#include <cmath>
#include <cstdio>

#include "absl/status/status.h"
#include "proxy_audit/syntax.h"
#include "str.h"

namespace proxy_audit {

using nlohmann::json;

double RoundMeasure(double x) {
  const double r = std::round(x * 1e6) / 1e6;
  return r == 0 ? 0 : r;
}

namespace {

json PositionList(const std::vector<Position>& qs) {
  json out = json::array();
  for (const Position& q : qs) out.push_back(q.ToString());
  return out;
}

std::string PositionsText(const std::vector<Position>& qs) {
  std::string out;
  for (const Position& q : qs) {
    if (!out.empty()) out += ' ';
    out += q.ToString();
  }
  return out;
}

std::string Measure(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", RoundMeasure(x));
  return buf;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

json ToJson(const Witness& w, std::optional<Verdict> verdict) {
  json out = {{"fingerprint", w.fingerprint},
              {"p1_text", w.p1_text},
              {"p2_text", w.p2_text},
              {"positions", PositionList(w.positions)},
              {"association", RoundMeasure(w.association)},
              {"influence", RoundMeasure(w.influence)},
              {"reach_prob", RoundMeasure(w.reach_prob)},
              {"size", w.subterm_size},
              {"mentions", w.mentions}};
  if (verdict) out["verdict"] = std::string(VerdictName(*verdict));
  return out;
}

json ToJson(const DetectionStats& s) {
  return {{"decomposition_count", s.decomposition_count},
          {"max_range", s.max_range},
          {"dataset_size", s.dataset_size},
          {"program_size", s.program_size},
          {"influence_evaluations", s.influence_evaluations},
          {"min_branch_balance", RoundMeasure(s.min_branch_balance)},
          {"wall_time_seconds", s.wall_time_seconds},
          {"incomplete", s.incomplete}};
}

json ToJson(const Edit& e) {
  return {{"positions", PositionList(e.positions)},
          {"before", e.before},
          {"after", e.after}};
}

absl::StatusOr<Edit> EditFromJson(const json& doc) {
  if (!doc.is_object() || !doc.contains("positions") ||
      !doc["positions"].is_array() || !doc.value("before", json()).is_string() ||
      !doc.value("after", json()).is_string()) {
    return absl::InvalidArgumentError("edit needs positions, before and after");
  }
  Edit e;
  for (const json& q : doc["positions"]) {
    if (!q.is_string()) return absl::InvalidArgumentError("bad edit position");
    absl::StatusOr<Position> p = Position::Parse(q.get<std::string>());
    if (!p.ok()) return p.status();
    e.positions.push_back(*p);
  }
  e.before = doc["before"].get<std::string>();
  e.after = doc["after"].get<std::string>();
  return e;
}

std::string SubexpressionCsv(std::span<const SubexprRecord> records,
                             double epsilon, double delta) {
  std::string out =
      "id,positions,fingerprint,p1_text,association,influence,size,"
      "reach_prob,parent,epsilon,delta\n";
  for (size_t i = 0; i < records.size(); ++i) {
    const SubexprRecord& r = records[i];
    StrAppend(&out, i, ",", CsvField(PositionsText(r.positions)), ",",
              r.fingerprint, ",", CsvField(r.p1_text), ",",
              Measure(r.association), ",",
              r.influence ? Measure(*r.influence) : "", ",", r.subterm_size,
              ",", Measure(r.reach_prob), ",",
              r.parent ? std::to_string(*r.parent) : "", ",", Measure(epsilon),
              ",", Measure(delta), "\n");
  }
  return out;
}

json SubexpressionRows(std::span<const SubexprRecord> records) {
  json rows = json::array();
  for (size_t i = 0; i < records.size(); ++i) {
    const SubexprRecord& r = records[i];
    rows.push_back({{"id", i},
                    {"positions", PositionList(r.positions)},
                    {"fingerprint", r.fingerprint},
                    {"p1_text", r.p1_text},
                    {"association", RoundMeasure(r.association)},
                    {"influence", r.influence ? json(RoundMeasure(*r.influence))
                                              : json()},
                    {"size", r.subterm_size},
                    {"reach_prob", RoundMeasure(r.reach_prob)},
                    {"parent", r.parent ? json(*r.parent) : json()}});
  }
  return rows;
}

json SubexpressionReport(std::span<const SubexprRecord> records,
                         double epsilon, double delta) {
  return {{"epsilon", epsilon},
          {"delta", delta},
          {"rows", SubexpressionRows(records)}};
}

std::string ProgramDiff(const Program& original, std::span<const Edit> edits,
                        const Program& repaired) {
  std::string out;
  for (const Edit& e : edits) {
    StrAppend(&out, "@ ", PositionsText(e.positions), "\n- ", e.before, "\n+ ",
              e.after, "\n");
  }
  StrAppend(&out, "--- original\n+++ repaired\n- ", Print(original), "\n+ ",
            Print(repaired), "\n");
  return out;
}

}  // namespace proxy_audit
