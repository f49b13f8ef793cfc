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

#include "proxy_audit/canonical.h"

#include <openssl/sha.h>

#include <algorithm>
#include <vector>

#include "absl/strings/escaping.h"
#include "str.h"
#include "absl/strings/str_join.h"
#include "proxy_audit/syntax.h"

namespace proxy_audit {
namespace {

std::string_view KindTag(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::kNAry:
      switch (e.nary_op()) {
        case NAryOp::kAdd:
          return "add";
        case NAryOp::kMul:
          return "mul";
        case NAryOp::kAnd:
          return "and";
        case NAryOp::kOr:
          return "or";
      }
      break;
    case ExprKind::kBinary:
      return e.binary_op() == BinaryOp::kSub ? "sub" : "div";
    case ExprKind::kNot:
      return "not";
    case ExprKind::kRel:
      switch (e.rel_op()) {
        case RelOp::kLe:
          return "le";
        case RelOp::kLt:
          return "lt";
        case RelOp::kEq:
          return "eq";
        case RelOp::kGe:
          return "ge";
        case RelOp::kGt:
          return "gt";
      }
      break;
    case ExprKind::kIte:
      return "ite";
    default:
      break;
  }
  return "?";
}

}  // namespace

std::string CanonicalText(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::kRealConst:
      return FormatReal(e.real_value());
    case ExprKind::kBoolConst:
      return e.bool_value() ? "true" : "false";
    case ExprKind::kVar:
      return e.var_name();
    default:
      break;
  }
  std::vector<std::string> parts;
  parts.reserve(e.arity());
  for (const ExprPtr& c : e.children()) parts.push_back(CanonicalText(*c));
  if (e.kind() == ExprKind::kNAry) std::sort(parts.begin(), parts.end());
  return StrCat(KindTag(e), "(", absl::StrJoin(parts, ","), ")");
}

bool CanonicallyEqual(const Expr& a, const Expr& b) {
  return CanonicalText(a) == CanonicalText(b);
}

bool CanonicallyEqual(const Program& a, const Program& b) {
  return a.params() == b.params() && CanonicallyEqual(a.expr(), b.expr());
}

std::string Fingerprint(const Expr& e) {
  const std::string text = CanonicalText(e);
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(),
         digest);
  return absl::BytesToHexString(
      absl::string_view(reinterpret_cast<char*>(digest), 8));
}

}  // namespace proxy_audit
