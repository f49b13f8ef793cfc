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

#ifndef PROXY_AUDIT_REPORT_H_
#define PROXY_AUDIT_REPORT_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/statusor.h"
#include "proxy_audit/detection.h"
#include "proxy_audit/oracle.h"
#include "proxy_audit/repair.h"

namespace proxy_audit {

// Measures are rounded to six decimals in every emitted document.
double RoundMeasure(double x);

nlohmann::json ToJson(const Witness& w, std::optional<Verdict> verdict = {});
nlohmann::json ToJson(const DetectionStats& s);
nlohmann::json ToJson(const Edit& e);
absl::StatusOr<Edit> EditFromJson(const nlohmann::json& doc);

// One row per subexpression: id, positions, fingerprint, p1_text,
// association, influence (empty when unmeasured), size, reach_prob,
// parent (empty for roots), epsilon, delta. A header line only when there
// are no subexpressions.
std::string SubexpressionCsv(std::span<const SubexprRecord> records,
                             double epsilon, double delta);
nlohmann::json SubexpressionRows(std::span<const SubexprRecord> records);
// {"epsilon", "delta", "rows"}; the thresholds shade the violation region.
nlohmann::json SubexpressionReport(std::span<const SubexprRecord> records,
                                   double epsilon, double delta);

// The edit list followed by the program before and after.
std::string ProgramDiff(const Program& original, std::span<const Edit> edits,
                        const Program& repaired);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_REPORT_H_
