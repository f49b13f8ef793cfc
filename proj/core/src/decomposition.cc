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

#include "proxy_audit/decomposition.h"

#include <functional>
#include <map>

#include "absl/status/status.h"
#include "str.h"
#include "check.h"
#include "proxy_audit/canonical.h"

namespace proxy_audit {

std::string FreshVariable(const Program& p) {
  if (!p.HasParam("u")) return "u";
  for (int i = 1;; ++i) {
    std::string name = StrCat("u", i);
    if (!p.HasParam(name)) return name;
  }
}

absl::StatusOr<Decomposition> MakeDecomposition(
    const Program& parent, std::vector<Position> positions) {
  if (positions.empty()) {
    return absl::InvalidArgumentError("decomposition needs a position");
  }
  std::sort(positions.begin(), positions.end());
  absl::StatusOr<ExprPtr> sub = SubtermAt(parent, positions.front());
  if (!sub.ok()) return sub.status();
  const std::string canon = CanonicalText(**sub);
  for (size_t i = 1; i < positions.size(); ++i) {
    absl::StatusOr<ExprPtr> other = SubtermAt(parent, positions[i]);
    if (!other.ok()) return other.status();
    if (CanonicalText(**other) != canon) {
      return absl::InvalidArgumentError(StrCat(
          "positions ", positions.front().ToString(), " and ",
          positions[i].ToString(), " address different subterms"));
    }
  }
  const std::string fresh = FreshVariable(parent);
  absl::StatusOr<ExprPtr> body =
      ReplaceAllAt(parent.body(), Expr::Var(fresh, (*sub)->type()), positions);
  if (!body.ok()) return body.status();
  std::vector<Param> params2 = parent.params();
  params2.push_back({fresh, (*sub)->type()});
  absl::StatusOr<Program> p1 = Program::Create(parent.params(), *sub);
  if (!p1.ok()) return p1.status();
  absl::StatusOr<Program> p2 = Program::Create(std::move(params2), *body);
  if (!p2.ok()) return p2.status();
  return Decomposition{parent, std::move(positions), fresh, *std::move(p1),
                       *std::move(p2)};
}

namespace {

bool HasVariable(const Expr& e) {
  if (e.kind() == ExprKind::kVar) return true;
  for (const ExprPtr& c : e.children()) {
    if (HasVariable(*c)) return true;
  }
  return false;
}

// Occurrence positions of each canonical non-constant subterm, keyed and
// ordered by canonical text.
std::map<std::string, std::vector<Position>> GroupOccurrences(
    const Program& p, int max_subset_size) {
  std::map<std::string, std::vector<Position>> groups;
  for (Position& q : AllPositions(p.expr(), max_subset_size)) {
    absl::StatusOr<ExprPtr> sub = SubtermAt(p.body(), q);
    PA_CHECK(sub.ok(), "enumerated position does not resolve");
    if (!HasVariable(**sub)) continue;
    groups[CanonicalText(**sub)].push_back(std::move(q));
  }
  for (auto& [text, qs] : groups) std::sort(qs.begin(), qs.end());
  return groups;
}

bool PairwiseDisjoint(const std::vector<Position>& qs) {
  for (size_t i = 0; i < qs.size(); ++i) {
    for (size_t j = i + 1; j < qs.size(); ++j) {
      if (Overlaps(qs[i], qs[j])) return false;
    }
  }
  return true;
}

// Calls `visit` with each occurrence set in enumeration order, stopping at
// the decomposition cap. Returns true when the enumeration is incomplete.
bool ForEachOccurrenceSet(
    const Program& p, const EnumerationLimits& limits,
    const std::function<void(std::vector<Position>)>& visit) {
  bool incomplete = false;
  size_t emitted = 0;
  auto emit = [&](std::vector<Position> set) {
    if (!PairwiseDisjoint(set)) return true;
    if (emitted >= limits.max_decompositions) {
      incomplete = true;
      return false;
    }
    ++emitted;
    visit(std::move(set));
    return true;
  };
  for (auto& [text, occ] : GroupOccurrences(p, limits.max_subset_size)) {
    const int n = static_cast<int>(occ.size());
    if (n > limits.max_occurrences_for_subsets) {
      incomplete = true;
      for (const Position& q : occ) {
        if (!emit({q})) return true;
      }
      if (!emit(occ)) return true;
      continue;
    }
    for (int k = 1; k <= n; ++k) {
      std::vector<int> comb(k);
      for (int i = 0; i < k; ++i) comb[i] = i;
      while (true) {
        std::vector<Position> set;
        set.reserve(k);
        for (int i : comb) set.push_back(occ[i]);
        if (!emit(std::move(set))) return true;
        int i = k - 1;
        while (i >= 0 && comb[i] == n - k + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      }
    }
  }
  return incomplete;
}

}  // namespace

EnumerationResult EnumerateDecompositions(const Program& p,
                                          const EnumerationLimits& limits) {
  EnumerationResult result;
  result.incomplete =
      ForEachOccurrenceSet(p, limits, [&](std::vector<Position> set) {
        absl::StatusOr<Decomposition> d = MakeDecomposition(p, std::move(set));
        PA_CHECK(d.ok(), std::string(d.status().message()).c_str());
        result.decompositions.push_back(*std::move(d));
      });
  return result;
}

DecompositionCount CountDecompositions(const Program& p,
                                       const EnumerationLimits& limits) {
  DecompositionCount result;
  result.incomplete = ForEachOccurrenceSet(
      p, limits, [&](std::vector<Position>) { ++result.count; });
  return result;
}

namespace {

ExprPtr Substitute(const ExprPtr& e, std::string_view x,
                   const ExprPtr& replacement) {
  if (e->kind() == ExprKind::kVar) {
    return e->var_name() == x ? replacement : e;
  }
  if (e->arity() == 0) return e;
  std::vector<ExprPtr> children;
  children.reserve(e->arity());
  bool changed = false;
  for (const ExprPtr& c : e->children()) {
    children.push_back(Substitute(c, x, replacement));
    changed |= children.back() != c;
  }
  return changed ? e->WithChildren(std::move(children)) : e;
}

}  // namespace

absl::StatusOr<Program> SubstituteAll(const Program& p1, std::string_view x,
                                      const Program& p2) {
  const int xi = p2.ParamIndex(x);
  if (xi < 0) {
    return absl::NotFoundError(
        StrCat("unknown variable '", x, "' in the outer program"));
  }
  if (p2.params()[xi].type != p1.type()) {
    return absl::InvalidArgumentError(
        StrCat("type error: '", x, "' is ",
                     TypeName(p2.params()[xi].type), " but the substituted "
                     "program is ", TypeName(p1.type())));
  }
  std::vector<Param> params;
  for (const Param& q : p2.params()) {
    if (q.name != x) params.push_back(q);
  }
  for (const Param& q : p1.params()) {
    if (std::find(params.begin(), params.end(), q) == params.end()) {
      return absl::NotFoundError(StrCat(
          "parameter '", q.name, "' of the substituted program is unknown"));
    }
  }
  return Program::Create(std::move(params), Substitute(p2.body(), x, p1.body()));
}

}  // namespace proxy_audit
