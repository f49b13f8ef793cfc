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

#include "proxy_audit/position.h"

#include <algorithm>
#include <charconv>
#include <map>

#include "absl/status/status.h"
#include "str.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "check.h"

namespace proxy_audit {

Step Step::Subset(std::vector<int> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  PA_CHECK(indices.size() >= 2, "operand subset needs two indices");
  return Step(0, std::move(indices));
}

std::strong_ordering Step::operator<=>(const Step& other) const {
  if (auto c = first() <=> other.first(); c != 0) return c;
  if (auto c = is_subset() <=> other.is_subset(); c != 0) return c;
  if (!is_subset()) return std::strong_ordering::equal;
  return std::lexicographical_compare_three_way(
      subset_.begin(), subset_.end(), other.subset_.begin(),
      other.subset_.end());
}

Position Position::Child(int index) const {
  std::vector<Step> s = steps_;
  s.push_back(Step::Child(index));
  return Position(std::move(s));
}

Position Position::Subset(std::vector<int> indices) const {
  std::vector<Step> s = steps_;
  s.push_back(Step::Subset(std::move(indices)));
  return Position(std::move(s));
}

Position Position::Parent() const {
  if (steps_.empty()) return *this;
  return Position(std::vector<Step>(steps_.begin(), steps_.end() - 1));
}

Position Position::Append(const Position& rel) const {
  std::vector<Step> s = steps_;
  s.insert(s.end(), rel.steps_.begin(), rel.steps_.end());
  return Position(std::move(s));
}

bool Position::IsPrefixOf(const Position& other) const {
  if (steps_.size() > other.steps_.size()) return false;
  return std::equal(steps_.begin(), steps_.end(), other.steps_.begin());
}

std::string Position::ToString() const {
  if (steps_.empty()) return "ε";
  std::vector<std::string> parts;
  parts.reserve(steps_.size());
  for (const Step& s : steps_) {
    if (s.is_subset()) {
      parts.push_back(StrCat("{", absl::StrJoin(s.subset(), ","), "}"));
    } else {
      parts.push_back(StrCat(s.index()));
    }
  }
  return absl::StrJoin(parts, ".");
}

namespace {

absl::StatusOr<int> ParseIndex(std::string_view text) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || v < 1) {
    return absl::InvalidArgumentError(
        StrCat("bad position step '", text, "'"));
  }
  return v;
}

}  // namespace

absl::StatusOr<Position> Position::Parse(std::string_view text) {
  if (text.empty() || text == "ε" || text == "e") return Position();
  std::vector<Step> steps;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const size_t close = text.find('}', i);
      if (close == std::string_view::npos) {
        return absl::InvalidArgumentError("unterminated operand subset");
      }
      std::vector<int> idx;
      for (absl::string_view part :
           absl::StrSplit(AsAbsl(text.substr(i + 1, close - i - 1)), ',')) {
        part = absl::StripAsciiWhitespace(part);
        absl::StatusOr<int> v =
            ParseIndex(std::string_view(part.data(), part.size()));
        if (!v.ok()) return v.status();
        idx.push_back(*v);
      }
      if (idx.size() < 2) {
        return absl::InvalidArgumentError("operand subset needs two indices");
      }
      steps.push_back(Step::Subset(std::move(idx)));
      i = close + 1;
    } else {
      size_t end = text.find('.', i);
      if (end == std::string_view::npos) end = text.size();
      absl::StatusOr<int> v = ParseIndex(text.substr(i, end - i));
      if (!v.ok()) return v.status();
      steps.push_back(Step::Child(*v));
      i = end;
    }
    if (i < text.size()) {
      if (text[i] != '.') {
        return absl::InvalidArgumentError(
            StrCat("bad position '", text, "'"));
      }
      ++i;
    }
  }
  for (size_t k = 0; k + 1 < steps.size(); ++k) {
    if (steps[k].is_subset()) {
      return absl::InvalidArgumentError(
          "an operand subset must be the last step of a position");
    }
  }
  return Position(std::move(steps));
}

std::strong_ordering Position::operator<=>(const Position& other) const {
  return std::lexicographical_compare_three_way(
      steps_.begin(), steps_.end(), other.steps_.begin(), other.steps_.end());
}

bool Overlaps(const Position& a, const Position& b) {
  const auto& sa = a.steps();
  const auto& sb = b.steps();
  const size_t n = std::min(sa.size(), sb.size());
  for (size_t i = 0; i < n; ++i) {
    const Step& x = sa[i];
    const Step& y = sb[i];
    if (!x.is_subset() && !y.is_subset()) {
      if (x.index() != y.index()) return false;
      continue;
    }
    // At least one subset step: they overlap iff the operand sets meet.
    std::vector<int> xs = x.is_subset() ? x.subset() : std::vector<int>{x.index()};
    std::vector<int> ys = y.is_subset() ? y.subset() : std::vector<int>{y.index()};
    std::vector<int> meet;
    std::set_intersection(xs.begin(), xs.end(), ys.begin(), ys.end(),
                          std::back_inserter(meet));
    return !meet.empty();
  }
  return true;  // one is a prefix of the other
}

namespace {

absl::Status StepError(const Position& q, size_t at) {
  return absl::OutOfRangeError(StrCat(
      "position ", q.ToString(), " does not resolve at step ", at + 1));
}

absl::Status CheckSubset(const Expr& node, const Step& step, const Position& q,
                         size_t at) {
  if (node.kind() != ExprKind::kNAry) return StepError(q, at);
  const auto& idx = step.subset();
  if (idx.back() > static_cast<int>(node.arity()) ||
      idx.size() >= node.arity()) {
    return StepError(q, at);
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<ExprPtr> SubtermAt(const ExprPtr& e, const Position& q) {
  ExprPtr cur = e;
  const auto& steps = q.steps();
  for (size_t k = 0; k < steps.size(); ++k) {
    const Step& s = steps[k];
    if (s.is_subset()) {
      if (k + 1 != steps.size()) return StepError(q, k);
      absl::Status st = CheckSubset(*cur, s, q, k);
      if (!st.ok()) return st;
      std::vector<ExprPtr> ops;
      for (int i : s.subset()) ops.push_back(cur->child(i - 1));
      return Expr::NAry(cur->nary_op(), std::move(ops));
    }
    if (s.index() < 1 || s.index() > static_cast<int>(cur->arity())) {
      return StepError(q, k);
    }
    cur = cur->child(s.index() - 1);
  }
  return cur;
}

absl::StatusOr<ExprPtr> SubtermAt(const Program& p, const Position& q) {
  return SubtermAt(p.body(), q);
}

namespace {

// Recursive simultaneous replacement. `qs` holds (remaining steps) views,
// all relative to `e`.
absl::StatusOr<ExprPtr> ReplaceRec(const ExprPtr& e, const ExprPtr& s,
                                   const std::vector<const Position*>& qs,
                                   size_t depth) {
  for (const Position* q : qs) {
    if (q->depth() == depth) return s;
  }
  // Group by the step taken at this depth.
  std::map<int, std::vector<const Position*>> by_child;
  std::vector<const Step*> subsets;
  for (const Position* q : qs) {
    const Step& st = q->steps()[depth];
    if (st.is_subset()) {
      absl::Status chk = CheckSubset(*e, st, *q, depth);
      if (!chk.ok()) return chk;
      if (depth + 1 != q->depth()) return StepError(*q, depth);
      subsets.push_back(&st);
    } else {
      if (st.index() < 1 || st.index() > static_cast<int>(e->arity())) {
        return StepError(*q, depth);
      }
      by_child[st.index()].push_back(q);
    }
  }
  std::vector<ExprPtr> children(e->children().begin(), e->children().end());
  for (auto& [index, sub] : by_child) {
    absl::StatusOr<ExprPtr> c = ReplaceRec(children[index - 1], s, sub,
                                           depth + 1);
    if (!c.ok()) return c;
    children[index - 1] = *std::move(c);
  }
  if (subsets.empty()) return e->WithChildren(std::move(children));

  // Operand-subset replacement on an n-ary node.
  std::vector<ExprPtr> slot(children.size());
  std::vector<bool> removed(children.size(), false);
  const bool splice = s->kind() == ExprKind::kNAry &&
                      s->nary_op() == e->nary_op() && subsets.size() == 1 &&
                      s->arity() == subsets.front()->subset().size();
  if (splice) {
    const auto& idx = subsets.front()->subset();
    for (size_t k = 0; k < idx.size(); ++k) children[idx[k] - 1] = s->child(k);
    return e->WithChildren(std::move(children));
  }
  for (const Step* st : subsets) {
    for (int i : st->subset()) removed[i - 1] = true;
    slot[st->subset().front() - 1] = s;
  }
  std::vector<ExprPtr> out;
  for (size_t i = 0; i < children.size(); ++i) {
    if (slot[i]) {
      out.push_back(slot[i]);
    } else if (!removed[i]) {
      out.push_back(children[i]);
    }
  }
  if (out.size() == 1) return out.front();
  return e->WithChildren(std::move(out));
}

}  // namespace

absl::StatusOr<ExprPtr> ReplaceAllAt(const ExprPtr& e, const ExprPtr& s,
                                     std::span<const Position> qs) {
  if (qs.empty()) return e;
  for (size_t i = 0; i < qs.size(); ++i) {
    for (size_t j = i + 1; j < qs.size(); ++j) {
      if (Overlaps(qs[i], qs[j])) {
        return absl::InvalidArgumentError(
            StrCat("positions ", qs[i].ToString(), " and ",
                         qs[j].ToString(), " overlap"));
      }
    }
  }
  for (const Position& q : qs) {
    absl::StatusOr<ExprPtr> old = SubtermAt(e, q);
    if (!old.ok()) return old.status();
    if ((*old)->type() != s->type()) {
      return absl::InvalidArgumentError(StrCat(
          "type error: cannot replace ", TypeName((*old)->type()),
          " subterm at ", q.ToString(), " with ", TypeName(s->type())));
    }
  }
  std::vector<const Position*> ptrs;
  for (const Position& q : qs) ptrs.push_back(&q);
  return ReplaceRec(e, s, ptrs, 0);
}

absl::StatusOr<ExprPtr> ReplaceAt(const ExprPtr& e, const ExprPtr& s,
                                  const Position& q) {
  return ReplaceAllAt(e, s, std::span<const Position>(&q, 1));
}

absl::StatusOr<Program> ReplaceAt(const Program& p, const ExprPtr& s,
                                  const Position& q) {
  absl::StatusOr<ExprPtr> body = ReplaceAt(p.body(), s, q);
  if (!body.ok()) return body.status();
  return p.WithBody(*std::move(body));
}

namespace {

void Structural(const Expr& e, Position& cur, std::vector<Position>& out,
                int max_subset) {
  out.push_back(cur);
  for (size_t i = 0; i < e.arity(); ++i) {
    Position child = cur.Child(static_cast<int>(i + 1));
    Structural(*e.child(i), child, out, max_subset);
  }
  if (max_subset >= 2 && e.kind() == ExprKind::kNAry && e.arity() >= 3) {
    const int n = static_cast<int>(e.arity());
    const int kmax = std::min(max_subset, n - 1);
    for (int k = 2; k <= kmax; ++k) {
      // Lexicographic k-combinations of 1..n.
      std::vector<int> comb(k);
      for (int i = 0; i < k; ++i) comb[i] = i + 1;
      while (true) {
        out.push_back(cur.Subset(comb));
        int i = k - 1;
        while (i >= 0 && comb[i] == n - k + i + 1) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      }
    }
  }
}

}  // namespace

std::vector<Position> StructuralPositions(const Expr& e) {
  std::vector<Position> out;
  out.reserve(e.size());
  Position root;
  Structural(e, root, out, 0);
  return out;
}

std::vector<Position> AllPositions(const Expr& e, int max_subset_size) {
  std::vector<Position> out;
  out.reserve(e.size());
  Position root;
  Structural(e, root, out, max_subset_size);
  return out;
}

absl::StatusOr<size_t> PreorderIndex(const Expr& e, const Position& q) {
  const Expr* cur = &e;
  size_t index = 0;
  const auto& steps = q.steps();
  for (size_t k = 0; k < steps.size(); ++k) {
    const Step& s = steps[k];
    if (s.is_subset()) {
      absl::Status st = CheckSubset(*cur, s, q, k);
      if (!st.ok()) return st;
      if (k + 1 != steps.size()) return StepError(q, k);
      return index;
    }
    if (s.index() < 1 || s.index() > static_cast<int>(cur->arity())) {
      return StepError(q, k);
    }
    index += 1;
    for (int i = 0; i + 1 < s.index(); ++i) index += cur->child(i)->size();
    cur = cur->child(s.index() - 1).get();
  }
  return index;
}

bool IsTailPosition(const Expr& e, const Position& q) {
  const Expr* cur = &e;
  for (const Step& s : q.steps()) {
    if (s.is_subset()) return false;
    if (cur->kind() != ExprKind::kIte || s.index() == 1) return false;
    if (s.index() > static_cast<int>(cur->arity())) return false;
    cur = cur->child(s.index() - 1).get();
  }
  return true;
}

}  // namespace proxy_audit
