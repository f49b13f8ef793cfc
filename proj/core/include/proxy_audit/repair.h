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

#ifndef PROXY_AUDIT_REPAIR_H_
#define PROXY_AUDIT_REPAIR_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/dataset.h"
#include "proxy_audit/detection.h"
#include "proxy_audit/oracle.h"

namespace proxy_audit {

// One guard on the ite path to a position: the row must evaluate `guard`
// to `value` (true for the then-branch).
struct GuardLiteral {
  ExprPtr guard;
  bool value = true;
};

// The conjunction of guard literals enclosing a position. A row satisfies
// it iff evaluating the program on that row reaches the position.
struct PathCondition {
  std::vector<GuardLiteral> literals;

  absl::StatusOr<bool> Holds(const RowEnv& env) const;
  // "true" for the empty condition; negated guards print as !(g).
  std::string ToString() const;
};

absl::StatusOr<PathCondition> PathConditionAt(const Program& p,
                                              const Position& q);

// Rows satisfying the path condition of some position of `d`, ascending.
absl::StatusOr<std::vector<RowIndex>> RowsSatisfying(const Decomposition& d,
                                                     const Population& pop,
                                                     bool allow_protected);

enum class UtilityKind { kAccuracy01, kNegMse };

// v: accuracy (0-1 loss) or negated mean squared error of a program's
// outputs against a target column.
struct Utility {
  UtilityKind kind = UtilityKind::kAccuracy01;
  std::vector<Value> target;

  // FailedPrecondition when the population has no label.
  static absl::StatusOr<Utility> FromLabel(const Population& pop,
                                           UtilityKind kind);
  // Agreement with the predictions of `p`.
  static absl::StatusOr<Utility> Agreement(const Program& p,
                                           const Population& pop,
                                           bool allow_protected);

  double Score(std::span<const Value> outputs) const;
  absl::StatusOr<double> Evaluate(const Program& p, const Population& pop,
                                  bool allow_protected) const;
};

// Accuracy against the label (negated squared error when the label is not
// a small set of integers), or agreement with `p` without a label.
absl::StatusOr<Utility> DefaultUtility(const Program& p, const Population& pop,
                                       bool allow_protected);

// The local expressions of a witness, each as a decomposition of `p`: p1
// itself, its non-constant subterms, and, when p1 is the guard of an ite,
// both branches and their non-constant subterms. p1 comes first. Fails
// with FailedPrecondition when the witness no longer matches `p`.
absl::StatusOr<std::vector<Decomposition>> LocalDecompositions(
    const Program& p, const Witness& w, int max_subset_size = 3);

struct ConstantChoice {
  ExprPtr constant;
  double utility = 0;  // v of the program with the constant substituted
};

// The constant r maximizing v([r/u]p2). On positions whose value is the
// program output this is the mode (0-1 loss) or mean (squared error) of the
// target over rows satisfying the path condition, falling back to the
// whole population when no row does. Booleans try false then true; other
// positions try the target values and the values p1 takes on the reached
// rows. Ties go to the smallest value.
absl::StatusOr<ConstantChoice> OptimalConstant(const Decomposition& d,
                                               const Population& pop,
                                               const Utility& v,
                                               bool allow_protected);

struct Edit {
  std::vector<Position> positions;
  std::string before;
  std::string after;
};

absl::StatusOr<Program> ApplyEdit(const Program& p, const Edit& e);

struct RepairCandidate {
  Program program;
  Edit edit;
  double utility = 0;
};

// Every local substitution after which the witness has influence <= delta
// or association <= epsilon, in local-expression order. Never empty.
absl::StatusOr<std::vector<RepairCandidate>> QualifyingRepairs(
    const Program& p, const Witness& w, const Population& pop,
    const DetectionConfig& cfg, const Utility& v);

// Local repair: substitutes the optimal constant for each local
// expression of `w`, keeps the substitutions after which the witness has
// influence <= delta or association <= epsilon, and returns the one with
// the highest utility (the first on ties).
absl::StatusOr<RepairCandidate> ProxyRepair(const Program& p, const Witness& w,
                                            const Population& pop,
                                            const DetectionConfig& cfg,
                                            const Utility& v);

using Oracle = std::function<Verdict(const Witness&)>;

enum class UndecidedPolicy { kSuspend, kApprove, kDeny };

struct RepairOutcome {
  Program repaired;
  std::vector<Edit> edits;
  size_t iterations = 0;
  // Witnesses of the final detection; all approved unless suspended.
  std::vector<Witness> residual_witnesses;
  bool suspended = false;
  std::vector<Witness> pending;  // undecided witnesses when suspended
};

// Detect, repair the strongest denied witness, repeat. Every edit replaces
// a non-constant subterm by a constant, so the loop ends after at most
// |p| iterations.
absl::StatusOr<RepairOutcome> RepairLoop(const Program& p,
                                         const Population& pop,
                                         const DetectionConfig& cfg,
                                         const Oracle& oracle,
                                         const Utility& v,
                                         UndecidedPolicy undecided);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_REPAIR_H_
