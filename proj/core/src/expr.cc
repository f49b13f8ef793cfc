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

#include "proxy_audit/expr.h"

#include <algorithm>
#include <unordered_set>

#include "absl/status/status.h"
#include "str.h"
#include "check.h"

namespace proxy_audit {

std::string_view TypeName(Type type) {
  return type == Type::kBool ? "bool" : "real";
}

std::string_view OpSymbol(NAryOp op) {
  switch (op) {
    case NAryOp::kAdd:
      return "+";
    case NAryOp::kMul:
      return "*";
    case NAryOp::kAnd:
      return "&&";
    case NAryOp::kOr:
      return "||";
  }
  return "?";
}

std::string_view OpSymbol(BinaryOp op) {
  return op == BinaryOp::kSub ? "-" : "/";
}

std::string_view OpSymbol(RelOp op) {
  switch (op) {
    case RelOp::kLe:
      return "<=";
    case RelOp::kLt:
      return "<";
    case RelOp::kEq:
      return "==";
    case RelOp::kGe:
      return ">=";
    case RelOp::kGt:
      return ">";
  }
  return "?";
}

Expr::Expr(ExprKind kind, Type type, int op, double number, std::string name,
           std::vector<ExprPtr> children)
    : kind_(kind),
      type_(type),
      op_(op),
      number_(number),
      name_(std::move(name)),
      children_(std::move(children)),
      size_(1),
      non_constant_size_(is_constant() ? 0 : 1) {
  for (const ExprPtr& c : children_) {
    PA_CHECK(c != nullptr, "null child");
    size_ += c->size_;
    non_constant_size_ += c->non_constant_size_;
  }
}

ExprPtr Expr::Real(double value) {
  return ExprPtr(new Expr(ExprKind::kRealConst, Type::kReal, 0, value, "", {}));
}

ExprPtr Expr::Bool(bool value) {
  return ExprPtr(new Expr(ExprKind::kBoolConst, Type::kBool, 0,
                          value ? 1.0 : 0.0, "", {}));
}

ExprPtr Expr::Var(std::string name, Type type) {
  PA_CHECK(!name.empty(), "empty variable name");
  return ExprPtr(new Expr(ExprKind::kVar, type, 0, 0.0, std::move(name), {}));
}

ExprPtr Expr::NAry(NAryOp op, std::vector<ExprPtr> operands) {
  const Type want = (op == NAryOp::kAdd || op == NAryOp::kMul) ? Type::kReal
                                                                : Type::kBool;
  std::vector<ExprPtr> flat;
  flat.reserve(operands.size());
  for (ExprPtr& e : operands) {
    PA_CHECK(e != nullptr, "null operand");
    PA_CHECK(e->type() == want, "ill-typed n-ary operand");
    if (e->kind() == ExprKind::kNAry && e->nary_op() == op) {
      flat.insert(flat.end(), e->children_.begin(), e->children_.end());
    } else {
      flat.push_back(std::move(e));
    }
  }
  PA_CHECK(flat.size() >= 2, "n-ary operation needs at least two operands");
  return ExprPtr(new Expr(ExprKind::kNAry, want, static_cast<int>(op), 0.0, "",
                          std::move(flat)));
}

ExprPtr Expr::Binary(BinaryOp op, ExprPtr left, ExprPtr right) {
  PA_CHECK(left && right, "null operand");
  PA_CHECK(left->type() == Type::kReal && right->type() == Type::kReal,
           "ill-typed arithmetic operand");
  return ExprPtr(new Expr(ExprKind::kBinary, Type::kReal, static_cast<int>(op),
                          0.0, "", {std::move(left), std::move(right)}));
}

ExprPtr Expr::Not(ExprPtr inner) {
  PA_CHECK(inner && inner->type() == Type::kBool, "ill-typed negation");
  return ExprPtr(
      new Expr(ExprKind::kNot, Type::kBool, 0, 0.0, "", {std::move(inner)}));
}

ExprPtr Expr::Rel(RelOp op, ExprPtr left, ExprPtr right) {
  PA_CHECK(left && right, "null operand");
  PA_CHECK(left->type() == Type::kReal && right->type() == Type::kReal,
           "ill-typed relational operand");
  return ExprPtr(new Expr(ExprKind::kRel, Type::kBool, static_cast<int>(op),
                          0.0, "", {std::move(left), std::move(right)}));
}

ExprPtr Expr::Ite(ExprPtr cond, ExprPtr then_branch, ExprPtr else_branch) {
  PA_CHECK(cond && then_branch && else_branch, "null operand");
  PA_CHECK(cond->type() == Type::kBool, "ite condition must be boolean");
  PA_CHECK(then_branch->type() == Type::kReal &&
               else_branch->type() == Type::kReal,
           "ite branches must be arithmetic");
  return ExprPtr(new Expr(
      ExprKind::kIte, Type::kReal, 0, 0.0, "",
      {std::move(cond), std::move(then_branch), std::move(else_branch)}));
}

ExprPtr Expr::WithChildren(std::vector<ExprPtr> children) const {
  switch (kind_) {
    case ExprKind::kRealConst:
    case ExprKind::kBoolConst:
    case ExprKind::kVar:
      PA_CHECK(children.empty(), "leaf has no children");
      return ExprPtr(new Expr(kind_, type_, op_, number_, name_, {}));
    case ExprKind::kNAry:
      return NAry(nary_op(), std::move(children));
    case ExprKind::kBinary:
      PA_CHECK(children.size() == 2, "binary arity");
      return Binary(binary_op(), std::move(children[0]),
                    std::move(children[1]));
    case ExprKind::kNot:
      PA_CHECK(children.size() == 1, "not arity");
      return Not(std::move(children[0]));
    case ExprKind::kRel:
      PA_CHECK(children.size() == 2, "rel arity");
      return Rel(rel_op(), std::move(children[0]), std::move(children[1]));
    case ExprKind::kIte:
      PA_CHECK(children.size() == 3, "ite arity");
      return Ite(std::move(children[0]), std::move(children[1]),
                 std::move(children[2]));
  }
  return nullptr;
}

bool StructurallyEqual(const Expr& a, const Expr& b) {
  if (&a == &b) return true;
  if (a.kind() != b.kind() || a.type() != b.type() ||
      a.arity() != b.arity() || a.size() != b.size()) {
    return false;
  }
  switch (a.kind()) {
    case ExprKind::kRealConst:
    case ExprKind::kBoolConst:
      return a.real_value() == b.real_value();
    case ExprKind::kVar:
      return a.var_name() == b.var_name();
    case ExprKind::kNAry:
      if (a.nary_op() != b.nary_op()) return false;
      break;
    case ExprKind::kBinary:
      if (a.binary_op() != b.binary_op()) return false;
      break;
    case ExprKind::kRel:
      if (a.rel_op() != b.rel_op()) return false;
      break;
    case ExprKind::kNot:
    case ExprKind::kIte:
      break;
  }
  for (size_t i = 0; i < a.arity(); ++i) {
    if (!StructurallyEqual(*a.child(i), *b.child(i))) return false;
  }
  return true;
}

namespace {

void CollectVariables(const Expr& e, std::vector<std::string>& out,
                      std::unordered_set<std::string>& seen) {
  if (e.kind() == ExprKind::kVar) {
    if (seen.insert(e.var_name()).second) out.push_back(e.var_name());
    return;
  }
  for (const ExprPtr& c : e.children()) CollectVariables(*c, out, seen);
}

absl::Status CheckScope(const std::vector<Param>& params, const Expr& e) {
  if (e.kind() == ExprKind::kVar) {
    auto it = std::find_if(params.begin(), params.end(), [&](const Param& p) {
      return p.name == e.var_name();
    });
    if (it == params.end()) {
      return absl::NotFoundError(
          StrCat("unbound variable '", e.var_name(), "'"));
    }
    if (it->type != e.type()) {
      return absl::InvalidArgumentError(StrCat(
          "type error: variable '", e.var_name(), "' is declared ",
          TypeName(it->type), " but used as ", TypeName(e.type())));
    }
    return absl::OkStatus();
  }
  for (const ExprPtr& c : e.children()) {
    absl::Status s = CheckScope(params, *c);
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace

std::vector<std::string> FreeVariables(const Expr& e) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  CollectVariables(e, out, seen);
  return out;
}

bool MentionsVariable(const Expr& e, std::string_view name) {
  if (e.kind() == ExprKind::kVar) return e.var_name() == name;
  for (const ExprPtr& c : e.children()) {
    if (MentionsVariable(*c, name)) return true;
  }
  return false;
}

absl::StatusOr<Program> Program::Create(std::vector<Param> params,
                                        ExprPtr body) {
  if (body == nullptr) return absl::InvalidArgumentError("empty program body");
  std::unordered_set<std::string> names;
  for (const Param& p : params) {
    if (p.name.empty()) return absl::InvalidArgumentError("empty parameter");
    if (!names.insert(p.name).second) {
      return absl::InvalidArgumentError(
          StrCat("duplicate parameter '", p.name, "'"));
    }
  }
  absl::Status s = CheckScope(params, *body);
  if (!s.ok()) return s;
  return Program(std::move(params), std::move(body));
}

Program Program::CreateOrDie(std::vector<Param> params, ExprPtr body) {
  absl::StatusOr<Program> p = Create(std::move(params), std::move(body));
  PA_CHECK(p.ok(), std::string(p.status().message()).c_str());
  return *std::move(p);
}

int Program::ParamIndex(std::string_view name) const {
  for (size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

absl::StatusOr<Program> Program::WithBody(ExprPtr body) const {
  return Create(params_, std::move(body));
}

std::vector<std::string> Program::ParamNames() const {
  std::vector<std::string> names;
  names.reserve(params_.size());
  for (const Param& p : params_) names.push_back(p.name);
  return names;
}

bool StructurallyEqual(const Program& a, const Program& b) {
  return a.params() == b.params() && StructurallyEqual(a.expr(), b.expr());
}

}  // namespace proxy_audit
