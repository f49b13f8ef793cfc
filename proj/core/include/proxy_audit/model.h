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

#ifndef PROXY_AUDIT_MODEL_H_
#define PROXY_AUDIT_MODEL_H_

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/statusor.h"
#include "proxy_audit/expr.h"

namespace proxy_audit {

// Model documents are JSON objects {"kind", "features", "payload"}:
//
//   decision_tree      payload {"nodes": [...]}; node 0 is the root. An
//                      internal node is {"feature", "op", "threshold",
//                      "left", "right"} with child indices; a leaf is
//                      {"value"}. Rows satisfying the guard go left.
//   rule_list          payload {"rules": [{"conditions": [{"feature", "op",
//                      "threshold"}, ...], "value"}], "default"}. The
//                      conditions of a rule are conjoined.
//   linear_regression  payload {"weights": [...], "bias"}.
//   linear_classifier  same payload; predicts 1 when the score is >= 0.
//   decision_forest    payload {"trees": [tree payloads], "weights"?,
//                      "threshold"?, "task"?}. Classification (default)
//                      predicts ite(sum >= threshold, 1, 0); "regression"
//                      returns the weighted sum.
//   expression         payload {"body": node} where node is
//                      {"node": kind, ...}; kinds are real, bool, var, add,
//                      mul, and, or, sub, div, not, le, lt, eq, ge, gt,
//                      ite. Optional "types" gives "real"/"bool" per
//                      feature, and "text" the printed program.
//
// Optional "reference": {"rows": [[...]], "predictions": [...],
// "scores"?: [...]} records predictions of the source model.
namespace model_kind {
inline constexpr std::string_view kDecisionTree = "decision_tree";
inline constexpr std::string_view kRuleList = "rule_list";
inline constexpr std::string_view kLinearRegression = "linear_regression";
inline constexpr std::string_view kLinearClassifier = "linear_classifier";
inline constexpr std::string_view kDecisionForest = "decision_forest";
inline constexpr std::string_view kExpression = "expression";
}  // namespace model_kind

// Fails with InvalidArgument for malformed documents, NotFound for a
// referenced feature missing from "features", and FailedPrecondition for
// empty models.
absl::StatusOr<Program> Translate(const nlohmann::json& doc);

absl::StatusOr<nlohmann::json> ReadJsonFile(const std::string& path);
absl::StatusOr<Program> LoadModel(const std::string& path);

// The linear score w.x + b of a linear document, as a program; used to
// compare scores before thresholding.
absl::StatusOr<Program> TranslateLinearScore(const nlohmann::json& doc);

// An "expression" document for `p`.
nlohmann::json ExpressionDocument(const Program& p);

// A decision_tree document when the body is a tree of guards
// `feature op constant` over constant leaves, else an expression document.
nlohmann::json ModelDocument(const Program& p);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_MODEL_H_
