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

#ifndef PROXY_AUDIT_EXPR_H_
#define PROXY_AUDIT_EXPR_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace proxy_audit {

// Static type of an expression. Arithmetic terms are reals, guards are
// booleans.
enum class Type { kReal, kBool };

std::string_view TypeName(Type type);

enum class ExprKind {
  kRealConst,
  kBoolConst,
  kVar,
  kNAry,    // add, mul, and, or: associative, flattened, arity >= 2
  kBinary,  // sub, div
  kNot,
  kRel,  // le, lt, eq, ge, gt over arithmetic operands
  kIte,
};

enum class NAryOp { kAdd, kMul, kAnd, kOr };
enum class BinaryOp { kSub, kDiv };
enum class RelOp { kLe, kLt, kEq, kGe, kGt };

std::string_view OpSymbol(NAryOp op);
std::string_view OpSymbol(BinaryOp op);
std::string_view OpSymbol(RelOp op);

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// An immutable, well-typed expression node. Nodes are shared between
// programs freely; every factory verifies the typing rules of the grammar
// and aborts on violation (callers that accept untrusted input go through
// the parser or `ReplaceAt`, which report type errors as statuses).
class Expr {
 public:
  static ExprPtr Real(double value);
  static ExprPtr Bool(bool value);
  static ExprPtr Var(std::string name, Type type = Type::kReal);
  // Operands whose op matches `op` are spliced in, so the result never has
  // a same-op n-ary child. Requires at least two operands after flattening.
  static ExprPtr NAry(NAryOp op, std::vector<ExprPtr> operands);
  static ExprPtr Binary(BinaryOp op, ExprPtr left, ExprPtr right);
  static ExprPtr Not(ExprPtr inner);
  static ExprPtr Rel(RelOp op, ExprPtr left, ExprPtr right);
  static ExprPtr Ite(ExprPtr cond, ExprPtr then_branch, ExprPtr else_branch);

  // Shorthands used by translation and tests.
  static ExprPtr Add(std::vector<ExprPtr> operands) {
    return NAry(NAryOp::kAdd, std::move(operands));
  }
  static ExprPtr Mul(std::vector<ExprPtr> operands) {
    return NAry(NAryOp::kMul, std::move(operands));
  }
  static ExprPtr And(std::vector<ExprPtr> operands) {
    return NAry(NAryOp::kAnd, std::move(operands));
  }
  static ExprPtr Or(std::vector<ExprPtr> operands) {
    return NAry(NAryOp::kOr, std::move(operands));
  }

  ExprKind kind() const { return kind_; }
  Type type() const { return type_; }

  double real_value() const { return number_; }
  bool bool_value() const { return number_ != 0.0; }
  const std::string& var_name() const { return name_; }
  NAryOp nary_op() const { return static_cast<NAryOp>(op_); }
  BinaryOp binary_op() const { return static_cast<BinaryOp>(op_); }
  RelOp rel_op() const { return static_cast<RelOp>(op_); }

  std::span<const ExprPtr> children() const { return children_; }
  const ExprPtr& child(size_t i) const { return children_[i]; }
  size_t arity() const { return children_.size(); }

  // Number of nodes in this subtree (the number of structural positions).
  size_t size() const { return size_; }
  // Number of nodes that are not literal constants.
  size_t non_constant_size() const { return non_constant_size_; }
  bool is_constant() const {
    return kind_ == ExprKind::kRealConst || kind_ == ExprKind::kBoolConst;
  }

  // Rebuilds this node over new children (same kind and operator).
  ExprPtr WithChildren(std::vector<ExprPtr> children) const;

 private:
  Expr(ExprKind kind, Type type, int op, double number, std::string name,
       std::vector<ExprPtr> children);

  ExprKind kind_;
  Type type_;
  int op_;
  double number_;
  std::string name_;
  std::vector<ExprPtr> children_;
  size_t size_;
  size_t non_constant_size_;
};

// Structural equality (operand order matters; see canonical.h for equality
// modulo associativity and commutativity).
bool StructurallyEqual(const Expr& a, const Expr& b);

// Distinct variable names in first-occurrence (preorder) order.
std::vector<std::string> FreeVariables(const Expr& e);
bool MentionsVariable(const Expr& e, std::string_view name);

struct Param {
  std::string name;
  Type type = Type::kReal;

  friend bool operator==(const Param&, const Param&) = default;
};

// A lambda-abstraction over an ordered list of distinct parameters.
class Program {
 public:
  // Checks that parameters are distinct and that every variable in `body`
  // is a parameter of the matching type.
  static absl::StatusOr<Program> Create(std::vector<Param> params,
                                        ExprPtr body);
  // Same checks as `Create`, aborting on failure; for internal use where the
  // invariants are established by construction.
  static Program CreateOrDie(std::vector<Param> params, ExprPtr body);

  const std::vector<Param>& params() const { return params_; }
  const ExprPtr& body() const { return body_; }
  const Expr& expr() const { return *body_; }
  Type type() const { return body_->type(); }
  size_t size() const { return body_->size(); }

  // Index of the named parameter, or -1.
  int ParamIndex(std::string_view name) const;
  bool HasParam(std::string_view name) const { return ParamIndex(name) >= 0; }

  // Returns a copy with `body` replaced; fails when the new body mentions
  // variables that are not parameters.
  absl::StatusOr<Program> WithBody(ExprPtr body) const;

  std::vector<std::string> ParamNames() const;

 private:
  Program(std::vector<Param> params, ExprPtr body)
      : params_(std::move(params)), body_(std::move(body)) {}

  std::vector<Param> params_;
  ExprPtr body_;
};

bool StructurallyEqual(const Program& a, const Program& b);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_EXPR_H_
