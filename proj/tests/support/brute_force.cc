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

#include "support/brute_force.h"

#include <algorithm>
#include <functional>

namespace proxy_audit::testing {
namespace {

bool SameHead(const Expr& a, const Expr& b) {
  if (a.kind() != b.kind() || a.type() != b.type() || a.arity() != b.arity()) {
    return false;
  }
  switch (a.kind()) {
    case ExprKind::kRealConst:
    case ExprKind::kBoolConst:
      return a.real_value() == b.real_value();
    case ExprKind::kVar:
      return a.var_name() == b.var_name();
    case ExprKind::kNAry:
      return a.nary_op() == b.nary_op();
    case ExprKind::kBinary:
      return a.binary_op() == b.binary_op();
    case ExprKind::kRel:
      return a.rel_op() == b.rel_op();
    default:
      return true;
  }
}

bool Match(const Expr& a, const Expr& b, size_t i, std::vector<bool>& used) {
  if (i == a.arity()) return true;
  for (size_t j = 0; j < b.arity(); ++j) {
    if (used[j] || !AcEqual(*a.child(i), *b.child(j))) continue;
    used[j] = true;
    if (Match(a, b, i + 1, used)) return true;
    used[j] = false;
  }
  return false;
}

bool HasVar(const Expr& e) {
  if (e.kind() == ExprKind::kVar) return true;
  for (const ExprPtr& c : e.children()) {
    if (HasVar(*c)) return true;
  }
  return false;
}

void Collect(const ExprPtr& e, size_t& next_id, int max_subset,
             std::vector<Instance>& out, std::set<size_t>& covered) {
  const size_t id = next_id++;
  const size_t mine = out.size();
  out.push_back({e, {}});
  std::vector<std::set<size_t>> child_ids;
  std::set<size_t> all{id};
  for (const ExprPtr& c : e->children()) {
    std::set<size_t> sub;
    Collect(c, next_id, max_subset, out, sub);
    all.insert(sub.begin(), sub.end());
    child_ids.push_back(std::move(sub));
  }
  out[mine].footprint = all;
  covered = all;
  if (e->kind() != ExprKind::kNAry) return;
  const size_t n = e->arity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const int k = __builtin_popcount(mask);
    if (k < 2 || k > max_subset || k >= static_cast<int>(n)) continue;
    std::vector<ExprPtr> ops;
    std::set<size_t> fp;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        ops.push_back(e->child(i));
        fp.insert(child_ids[i].begin(), child_ids[i].end());
      }
    }
    out.push_back({Expr::NAry(e->nary_op(), ops), fp});
  }
}

bool Disjoint(const std::set<size_t>& a, const std::set<size_t>& b) {
  for (size_t x : a) {
    if (b.count(x)) return false;
  }
  return true;
}

}  // namespace

bool AcEqual(const Expr& a, const Expr& b) {
  if (!SameHead(a, b)) return false;
  if (a.kind() == ExprKind::kNAry) {
    std::vector<bool> used(b.arity(), false);
    return Match(a, b, 0, used);
  }
  for (size_t i = 0; i < a.arity(); ++i) {
    if (!AcEqual(*a.child(i), *b.child(i))) return false;
  }
  return true;
}

std::vector<Instance> AllInstances(const ExprPtr& e, int max_subset) {
  std::vector<Instance> out;
  size_t next_id = 0;
  std::set<size_t> covered;
  Collect(e, next_id, max_subset, out, covered);
  return out;
}

size_t BruteForceDecompositionCount(const ExprPtr& e, int max_subset) {
  std::vector<Instance> inst = AllInstances(e, max_subset);
  std::vector<std::vector<const Instance*>> classes;
  for (const Instance& i : inst) {
    if (!HasVar(*i.term)) continue;
    bool placed = false;
    for (auto& cls : classes) {
      if (AcEqual(*cls.front()->term, *i.term)) {
        cls.push_back(&i);
        placed = true;
        break;
      }
    }
    if (!placed) classes.push_back({&i});
  }
  size_t total = 0;
  for (const auto& cls : classes) {
    const size_t n = cls.size();
    // Count independent sets of the overlap graph by recursion.
    std::function<size_t(size_t, std::vector<const Instance*>&)> count =
        [&](size_t i, std::vector<const Instance*>& chosen) -> size_t {
      if (i == n) return chosen.empty() ? 0 : 1;
      size_t c = count(i + 1, chosen);
      bool ok = true;
      for (const Instance* x : chosen) {
        ok = ok && Disjoint(x->footprint, cls[i]->footprint);
      }
      if (ok) {
        chosen.push_back(cls[i]);
        c += count(i + 1, chosen);
        chosen.pop_back();
      }
      return c;
    };
    std::vector<const Instance*> chosen;
    total += count(0, chosen);
  }
  return total;
}

}  // namespace proxy_audit::testing
