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

#ifndef PROXY_AUDIT_DECOMPOSITION_H_
#define PROXY_AUDIT_DECOMPOSITION_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/expr.h"
#include "proxy_audit/position.h"

namespace proxy_audit {

struct EnumerationLimits {
  // Largest operand subset of an n-ary node considered as a subterm.
  int max_subset_size = 3;
  size_t max_decompositions = 100000;
  // A subterm with more occurrences than this only yields its singleton
  // occurrence sets and the set of all occurrences.
  int max_occurrences_for_subsets = 12;
};

// p = [p1/u]p2: p1 is the subterm shared by all `positions`, p2 is the
// parent with the fresh variable `u` at each of them.
struct Decomposition {
  Program parent;
  std::vector<Position> positions;
  std::string fresh_var;
  Program p1;
  Program p2;

  const ExprPtr& subterm() const { return p1.body(); }
};

// A parameter name not used by `p` ("u", "u1", "u2", ...).
std::string FreshVariable(const Program& p);

// Fails when a position does not resolve, when the positions overlap or when
// they address canonically different subterms.
absl::StatusOr<Decomposition> MakeDecomposition(const Program& parent,
                                                std::vector<Position> positions);

struct EnumerationResult {
  std::vector<Decomposition> decompositions;
  // Set when a limit cut the enumeration short.
  bool incomplete = false;
};

// One decomposition per canonical non-constant subterm and nonempty,
// pairwise non-overlapping subset of its occurrences, including operand
// subsets of associative nodes. Ordered by canonical text, then by
// occurrence set (smaller sets first, then position order).
EnumerationResult EnumerateDecompositions(const Program& p,
                                          const EnumerationLimits& limits);

struct DecompositionCount {
  size_t count = 0;
  bool incomplete = false;
};

// Same count as `EnumerateDecompositions(p, limits).decompositions.size()`
// without building the programs.
DecompositionCount CountDecompositions(const Program& p,
                                       const EnumerationLimits& limits);

// [p1/x]p2: replaces every occurrence of `x` in p2 by p1's body and drops
// `x` from the parameters. p1's parameters must be parameters of p2.
absl::StatusOr<Program> SubstituteAll(const Program& p1, std::string_view x,
                                      const Program& p2);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_DECOMPOSITION_H_
