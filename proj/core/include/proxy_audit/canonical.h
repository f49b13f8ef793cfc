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

#ifndef PROXY_AUDIT_CANONICAL_H_
#define PROXY_AUDIT_CANONICAL_H_

#include <string>

#include "proxy_audit/expr.h"

namespace proxy_audit {

// Fully parenthesized prefix text in which the operands of every
// associative-commutative operator (+, *, &&, ||) are sorted. Two terms have
// equal canonical text iff they are equal modulo associativity and
// commutativity of those operators. Variable names are kept.
std::string CanonicalText(const Expr& e);

bool CanonicallyEqual(const Expr& a, const Expr& b);
bool CanonicallyEqual(const Program& a, const Program& b);

// First 16 hex digits of SHA-256 over `CanonicalText(e)`.
std::string Fingerprint(const Expr& e);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_CANONICAL_H_
