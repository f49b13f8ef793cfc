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

#include "proxy_audit/evaluate.h"

#include <algorithm>
#include <numeric>

#include "absl/status/status.h"
#include "str.h"
#include "check.h"

namespace proxy_audit {

RowEnv::RowEnv(const Program& p, std::span<const Value> values) {
  PA_CHECK(values.size() == p.params().size(), "argument count mismatch");
  bindings_.reserve(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    bindings_.emplace_back(p.params()[i].name, values[i]);
  }
}

void RowEnv::Bind(std::string name, Value value) {
  for (auto& [n, v] : bindings_) {
    if (n == name) {
      v = value;
      return;
    }
  }
  bindings_.emplace_back(std::move(name), value);
}

const Value* RowEnv::Find(std::string_view name) const {
  for (const auto& [n, v] : bindings_) {
    if (n == name) return &v;
  }
  return nullptr;
}

namespace {

bool Compare(RelOp op, Value a, Value b) {
  switch (op) {
    case RelOp::kLe:
      return a <= b;
    case RelOp::kLt:
      return a < b;
    case RelOp::kEq:
      return a == b;
    case RelOp::kGe:
      return a >= b;
    case RelOp::kGt:
      return a > b;
  }
  return false;
}

absl::Status DivisionByZero() {
  return absl::InvalidArgumentError("division by zero");
}

absl::Status Unbound(std::string_view name) {
  return absl::NotFoundError(StrCat("unbound variable '", name, "'"));
}

}  // namespace

absl::StatusOr<Value> Evaluate(const Expr& e, const RowEnv& env) {
  switch (e.kind()) {
    case ExprKind::kRealConst:
    case ExprKind::kBoolConst:
      return e.real_value();
    case ExprKind::kVar: {
      const Value* v = env.Find(e.var_name());
      if (v == nullptr) return Unbound(e.var_name());
      return *v;
    }
    case ExprKind::kNAry: {
      const NAryOp op = e.nary_op();
      Value acc = (op == NAryOp::kAdd || op == NAryOp::kOr) ? 0.0 : 1.0;
      for (const ExprPtr& c : e.children()) {
        absl::StatusOr<Value> v = Evaluate(*c, env);
        if (!v.ok()) return v;
        switch (op) {
          case NAryOp::kAdd:
            acc += *v;
            break;
          case NAryOp::kMul:
            acc *= *v;
            break;
          case NAryOp::kAnd:
            acc = (acc != 0 && *v != 0) ? 1.0 : 0.0;
            break;
          case NAryOp::kOr:
            acc = (acc != 0 || *v != 0) ? 1.0 : 0.0;
            break;
        }
      }
      return acc;
    }
    case ExprKind::kBinary: {
      absl::StatusOr<Value> a = Evaluate(*e.child(0), env);
      if (!a.ok()) return a;
      absl::StatusOr<Value> b = Evaluate(*e.child(1), env);
      if (!b.ok()) return b;
      if (e.binary_op() == BinaryOp::kSub) return *a - *b;
      if (*b == 0) return DivisionByZero();
      return *a / *b;
    }
    case ExprKind::kNot: {
      absl::StatusOr<Value> a = Evaluate(*e.child(0), env);
      if (!a.ok()) return a;
      return *a != 0 ? 0.0 : 1.0;
    }
    case ExprKind::kRel: {
      absl::StatusOr<Value> a = Evaluate(*e.child(0), env);
      if (!a.ok()) return a;
      absl::StatusOr<Value> b = Evaluate(*e.child(1), env);
      if (!b.ok()) return b;
      return Compare(e.rel_op(), *a, *b) ? 1.0 : 0.0;
    }
    case ExprKind::kIte: {
      absl::StatusOr<Value> c = Evaluate(*e.child(0), env);
      if (!c.ok()) return c;
      return Evaluate(*e.child(*c != 0 ? 1 : 2), env);
    }
  }
  return absl::InternalError("unknown expression kind");
}

absl::StatusOr<Value> Evaluate(const Program& p, std::span<const Value> args) {
  if (args.size() != p.params().size()) {
    return absl::InvalidArgumentError(StrCat(
        "expected ", p.params().size(), " arguments, got ", args.size()));
  }
  return Evaluate(p.expr(), RowEnv(p, args));
}

void ColumnEnv::BindColumn(std::string name, std::span<const Value> column) {
  Binding b;
  b.column = column;
  for (auto& [n, v] : bindings_) {
    if (n == name) {
      v = b;
      return;
    }
  }
  bindings_.emplace_back(std::move(name), b);
}

void ColumnEnv::BindConstant(std::string name, Value value) {
  Binding b;
  b.constant = value;
  b.is_constant = true;
  for (auto& [n, v] : bindings_) {
    if (n == name) {
      v = b;
      return;
    }
  }
  bindings_.emplace_back(std::move(name), b);
}

const ColumnEnv::Binding* ColumnEnv::Find(std::string_view name) const {
  for (const auto& [n, v] : bindings_) {
    if (n == name) return &v;
  }
  return nullptr;
}

namespace {

class BatchEvaluator {
 public:
  BatchEvaluator(const ColumnEnv& env, Reachability* reach)
      : env_(env), reach_(reach) {}

  // `id` is the preorder id of `e` within the root expression.
  absl::Status Eval(const Expr& e, size_t id, std::span<const RowIndex> rows,
                    std::vector<Value>& out) {
    out.resize(rows.size());
    if (reach_ != nullptr) reach_->rows[id].assign(rows.begin(), rows.end());
    if (rows.empty()) return absl::OkStatus();
    switch (e.kind()) {
      case ExprKind::kRealConst:
      case ExprKind::kBoolConst:
        std::fill(out.begin(), out.end(), e.real_value());
        return absl::OkStatus();
      case ExprKind::kVar: {
        const ColumnEnv::Binding* b = env_.Find(e.var_name());
        if (b == nullptr) return Unbound(e.var_name());
        if (b->is_constant) {
          std::fill(out.begin(), out.end(), b->constant);
        } else {
          for (size_t i = 0; i < rows.size(); ++i) out[i] = b->column[rows[i]];
        }
        return absl::OkStatus();
      }
      case ExprKind::kNAry:
        return EvalNAry(e, id, rows, out);
      case ExprKind::kBinary: {
        std::vector<Value> a, b;
        absl::Status s = Eval(*e.child(0), id + 1, rows, a);
        if (!s.ok()) return s;
        s = Eval(*e.child(1), id + 1 + e.child(0)->size(), rows, b);
        if (!s.ok()) return s;
        if (e.binary_op() == BinaryOp::kSub) {
          for (size_t i = 0; i < rows.size(); ++i) out[i] = a[i] - b[i];
        } else {
          for (size_t i = 0; i < rows.size(); ++i) {
            if (b[i] == 0) {
              return absl::InvalidArgumentError(
                  StrCat("division by zero at row ", rows[i]));
            }
            out[i] = a[i] / b[i];
          }
        }
        return absl::OkStatus();
      }
      case ExprKind::kNot: {
        absl::Status s = Eval(*e.child(0), id + 1, rows, out);
        if (!s.ok()) return s;
        for (Value& v : out) v = v != 0 ? 0.0 : 1.0;
        return absl::OkStatus();
      }
      case ExprKind::kRel: {
        std::vector<Value> a, b;
        absl::Status s = Eval(*e.child(0), id + 1, rows, a);
        if (!s.ok()) return s;
        s = Eval(*e.child(1), id + 1 + e.child(0)->size(), rows, b);
        if (!s.ok()) return s;
        const RelOp op = e.rel_op();
        for (size_t i = 0; i < rows.size(); ++i) {
          out[i] = Compare(op, a[i], b[i]) ? 1.0 : 0.0;
        }
        return absl::OkStatus();
      }
      case ExprKind::kIte:
        return EvalIte(e, id, rows, out);
    }
    return absl::InternalError("unknown expression kind");
  }

 private:
  absl::Status EvalNAry(const Expr& e, size_t id,
                        std::span<const RowIndex> rows,
                        std::vector<Value>& out) {
    const NAryOp op = e.nary_op();
    std::fill(out.begin(), out.end(),
              (op == NAryOp::kAdd || op == NAryOp::kOr) ? 0.0 : 1.0);
    std::vector<Value> v;
    size_t child_id = id + 1;
    for (const ExprPtr& c : e.children()) {
      absl::Status s = Eval(*c, child_id, rows, v);
      if (!s.ok()) return s;
      child_id += c->size();
      for (size_t i = 0; i < rows.size(); ++i) {
        switch (op) {
          case NAryOp::kAdd:
            out[i] += v[i];
            break;
          case NAryOp::kMul:
            out[i] *= v[i];
            break;
          case NAryOp::kAnd:
            out[i] = (out[i] != 0 && v[i] != 0) ? 1.0 : 0.0;
            break;
          case NAryOp::kOr:
            out[i] = (out[i] != 0 || v[i] != 0) ? 1.0 : 0.0;
            break;
        }
      }
    }
    return absl::OkStatus();
  }

  absl::Status EvalIte(const Expr& e, size_t id, std::span<const RowIndex> rows,
                       std::vector<Value>& out) {
    std::vector<Value> cond;
    absl::Status s = Eval(*e.child(0), id + 1, rows, cond);
    if (!s.ok()) return s;
    std::vector<RowIndex> then_rows, else_rows;
    std::vector<size_t> then_at, else_at;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (cond[i] != 0) {
        then_rows.push_back(rows[i]);
        then_at.push_back(i);
      } else {
        else_rows.push_back(rows[i]);
        else_at.push_back(i);
      }
    }
    const size_t then_id = id + 1 + e.child(0)->size();
    const size_t else_id = then_id + e.child(1)->size();
    std::vector<Value> v;
    s = Eval(*e.child(1), then_id, then_rows, v);
    if (!s.ok()) return s;
    for (size_t i = 0; i < then_at.size(); ++i) out[then_at[i]] = v[i];
    s = Eval(*e.child(2), else_id, else_rows, v);
    if (!s.ok()) return s;
    for (size_t i = 0; i < else_at.size(); ++i) out[else_at[i]] = v[i];
    return absl::OkStatus();
  }

  const ColumnEnv& env_;
  Reachability* reach_;
};

}  // namespace

absl::StatusOr<std::vector<Value>> EvaluateBatch(const Expr& e,
                                                 const ColumnEnv& env,
                                                 std::span<const RowIndex> rows,
                                                 Reachability* reach) {
  if (reach != nullptr) {
    reach->rows.assign(e.size(), {});
  }
  BatchEvaluator eval(env, reach);
  std::vector<Value> out;
  absl::Status s = eval.Eval(e, 0, rows, out);
  if (!s.ok()) return s;
  return out;
}

std::vector<RowIndex> AllRows(size_t n) {
  std::vector<RowIndex> rows(n);
  std::iota(rows.begin(), rows.end(), RowIndex{0});
  return rows;
}

}  // namespace proxy_audit
