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

#ifndef PROXY_AUDIT_EVALUATE_H_
#define PROXY_AUDIT_EVALUATE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/expr.h"

namespace proxy_audit {

// Values are doubles; booleans are 0 and 1.
using Value = double;
using RowIndex = uint32_t;

// Name-to-value bindings for scalar evaluation.
class RowEnv {
 public:
  RowEnv() = default;
  // Binds params[i] to values[i].
  RowEnv(const Program& p, std::span<const Value> values);

  void Bind(std::string name, Value value);
  // Returns nullptr when unbound.
  const Value* Find(std::string_view name) const;

 private:
  std::vector<std::pair<std::string, Value>> bindings_;
};

// Big-step evaluation; an ite evaluates its guard and exactly one branch.
// Fails on division by zero and unbound variables.
absl::StatusOr<Value> Evaluate(const Expr& e, const RowEnv& env);
absl::StatusOr<Value> Evaluate(const Program& p, std::span<const Value> args);

// Column bindings for set-at-a-time evaluation. A variable is bound either
// to a column indexed by row, or to a single value for every row.
class ColumnEnv {
 public:
  void BindColumn(std::string name, std::span<const Value> column);
  void BindConstant(std::string name, Value value);

  struct Binding {
    std::span<const Value> column;
    Value constant = 0;
    bool is_constant = false;
  };
  const Binding* Find(std::string_view name) const;

 private:
  std::vector<std::pair<std::string, Binding>> bindings_;
};

// Rows that reach each node, indexed by preorder node id. A node that is
// never reached has an empty list.
struct Reachability {
  std::vector<std::vector<RowIndex>> rows;
};

// Evaluates `e` on `rows` only (sorted, distinct), returning one value per
// row. Ite nodes route each row to the branch it takes, so subterms are
// evaluated only on the rows that reach them. When `reach` is given it is
// resized to `e.size()` and filled.
absl::StatusOr<std::vector<Value>> EvaluateBatch(const Expr& e,
                                                 const ColumnEnv& env,
                                                 std::span<const RowIndex> rows,
                                                 Reachability* reach = nullptr);

// [0, n).
std::vector<RowIndex> AllRows(size_t n);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_EVALUATE_H_
