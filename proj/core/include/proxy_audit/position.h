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

#ifndef PROXY_AUDIT_POSITION_H_
#define PROXY_AUDIT_POSITION_H_

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/expr.h"

namespace proxy_audit {

// One step of a positional indicator: descend into child `index` (1-based),
// or select a strict subset of operands of an associative n-ary node. A
// subset step denotes the n-ary term over the selected operands and is
// always the last step of a path.
class Step {
 public:
  static Step Child(int index) { return Step(index, {}); }
  static Step Subset(std::vector<int> indices);

  bool is_subset() const { return !subset_.empty(); }
  int index() const { return index_; }
  const std::vector<int>& subset() const { return subset_; }
  // Smallest operand index the step touches.
  int first() const { return is_subset() ? subset_.front() : index_; }

  bool operator==(const Step& other) const = default;
  std::strong_ordering operator<=>(const Step& other) const;

 private:
  Step(int index, std::vector<int> subset)
      : index_(index), subset_(std::move(subset)) {}

  int index_;
  std::vector<int> subset_;
};

// A path from the root of an expression; the empty path is the root.
class Position {
 public:
  Position() = default;
  explicit Position(std::vector<Step> steps) : steps_(std::move(steps)) {}

  static Position Root() { return Position(); }
  // Parses "ε" (or "") for the root, otherwise '.'-separated steps such as
  // "1.1.2" or "2.{1,3}".
  static absl::StatusOr<Position> Parse(std::string_view text);

  const std::vector<Step>& steps() const { return steps_; }
  bool is_root() const { return steps_.empty(); }
  size_t depth() const { return steps_.size(); }
  bool ends_in_subset() const {
    return !steps_.empty() && steps_.back().is_subset();
  }

  Position Child(int index) const;
  Position Subset(std::vector<int> indices) const;
  Position Parent() const;
  // Concatenation: the position `rel` inside the subterm at `*this`.
  Position Append(const Position& rel) const;

  bool IsPrefixOf(const Position& other) const;

  std::string ToString() const;

  bool operator==(const Position& other) const = default;
  std::strong_ordering operator<=>(const Position& other) const;

 private:
  std::vector<Step> steps_;
};

// True when the two positions address overlapping parts of a term (one is a
// prefix of the other, or they select intersecting operands of one node).
bool Overlaps(const Position& a, const Position& b);

// e|_q. Fails with OutOfRange when a step does not resolve.
absl::StatusOr<ExprPtr> SubtermAt(const ExprPtr& e, const Position& q);
absl::StatusOr<ExprPtr> SubtermAt(const Program& p, const Position& q);

// e[s]_q. The replacement must have the type of the replaced subterm. For
// a subset step the selected operands are removed and `s` is inserted at
// the first selected index; when `s` is an n-ary term of the same operator
// whose arity equals the subset size, its operands are put back in the
// selected slots.
absl::StatusOr<ExprPtr> ReplaceAt(const ExprPtr& e, const ExprPtr& s,
                                  const Position& q);
// Same as above over a program body; `s` may only mention parameters.
absl::StatusOr<Program> ReplaceAt(const Program& p, const ExprPtr& s,
                                  const Position& q);

// Replaces `s` at every position of `qs` simultaneously, so indices always
// refer to the original term. Positions must be pairwise non-overlapping.
absl::StatusOr<ExprPtr> ReplaceAllAt(const ExprPtr& e, const ExprPtr& s,
                                     std::span<const Position> qs);

// Structural positions in preorder (one per node).
std::vector<Position> StructuralPositions(const Expr& e);

// Structural positions plus, after each n-ary node with arity >= 3, its
// operand subsets of size 2..min(max_subset_size, arity - 1) in
// lexicographic order.
std::vector<Position> AllPositions(const Expr& e, int max_subset_size);

// Preorder index of the node a position resolves to (for a subset step, the
// index of the n-ary node whose operands are selected).
absl::StatusOr<size_t> PreorderIndex(const Expr& e, const Position& q);

// True when every step descends through an ite branch, i.e. the subterm's
// value is the program output on the rows that reach it.
bool IsTailPosition(const Expr& e, const Position& q);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_POSITION_H_
