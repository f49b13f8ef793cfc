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

#ifndef PROXY_AUDIT_SYNTAX_H_
#define PROXY_AUDIT_SYNTAX_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/expr.h"

namespace proxy_audit {

// Textual program format:
//
//   program := 'lambda' param (',' param)* '.' expr
//   param   := ident (':' ('real' | 'bool'))?
//   expr    := or-expr
//   or      := and ('||' and)*
//   and     := not ('&&' not)*
//   not     := '!' not | rel
//   rel     := sum (('<=' | '<' | '==' | '>=' | '>') sum)?
//   sum     := prod (('+' | '-') prod)*
//   prod    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | 'true' | 'false' | ident
//            | 'ite' '(' expr ',' expr ',' expr ')' | '(' expr ')'
//
// Parameters default to `real`. Syntax errors carry "line:column" and the
// expected token; ill-typed terms are reported as type errors. Both come
// back as InvalidArgument.
absl::StatusOr<Program> ParseProgram(std::string_view text);

// Parses a bare expression whose variables are typed by `params`.
absl::StatusOr<ExprPtr> ParseExpr(std::string_view text,
                                  const std::vector<Param>& params);

// Prints with the minimum parentheses needed for `ParseProgram` to rebuild
// a structurally equal program. Reals use the shortest round-trip form.
std::string Print(const Expr& e);
std::string Print(const Program& p);

std::string FormatReal(double value);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_SYNTAX_H_
