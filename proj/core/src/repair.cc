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

#include "proxy_audit/repair.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "absl/status/status.h"
#include "check.h"
#include "proxy_audit/canonical.h"
#include "proxy_audit/measures.h"
#include "proxy_audit/syntax.h"
#include "str.h"

namespace proxy_audit {

absl::StatusOr<bool> PathCondition::Holds(const RowEnv& env) const {
  for (const GuardLiteral& lit : literals) {
    absl::StatusOr<Value> g = Evaluate(*lit.guard, env);
    if (!g.ok()) return g.status();
    if ((*g != 0) != lit.value) return false;
  }
  return true;
}

std::string PathCondition::ToString() const {
  if (literals.empty()) return "true";
  std::string out;
  for (const GuardLiteral& lit : literals) {
    if (!out.empty()) out += " && ";
    out += lit.value ? Print(*lit.guard) : StrCat("!(", Print(*lit.guard), ")");
  }
  return out;
}

absl::StatusOr<PathCondition> PathConditionAt(const Program& p,
                                              const Position& q) {
  if (!SubtermAt(p, q).ok()) return SubtermAt(p, q).status();
  PathCondition phi;
  const Expr* cur = &p.expr();
  for (const Step& s : q.steps()) {
    if (s.is_subset()) break;
    if (cur->kind() == ExprKind::kIte && s.index() > 1) {
      phi.literals.push_back({cur->child(0), s.index() == 2});
    }
    cur = cur->child(s.index() - 1).get();
  }
  return phi;
}

absl::StatusOr<std::vector<RowIndex>> RowsSatisfying(const Decomposition& d,
                                                     const Population& pop,
                                                     bool allow_protected) {
  std::vector<PathCondition> phis;
  for (const Position& q : d.positions) {
    absl::StatusOr<PathCondition> phi = PathConditionAt(d.parent, q);
    if (!phi.ok()) return phi.status();
    phis.push_back(*std::move(phi));
  }
  absl::StatusOr<std::vector<std::vector<Value>>> rows =
      pop.ParamRows(d.parent, allow_protected);
  if (!rows.ok()) return rows.status();
  std::vector<RowIndex> out;
  for (size_t i = 0; i < rows->size(); ++i) {
    RowEnv env(d.parent, (*rows)[i]);
    for (const PathCondition& phi : phis) {
      absl::StatusOr<bool> h = phi.Holds(env);
      if (!h.ok()) return h.status();
      if (*h) {
        out.push_back(static_cast<RowIndex>(i));
        break;
      }
    }
  }
  return out;
}

absl::StatusOr<Utility> Utility::FromLabel(const Population& pop,
                                           UtilityKind kind) {
  if (!pop.label().has_value()) {
    return absl::FailedPreconditionError("utility needs a label column");
  }
  std::span<const Value> y = pop.values(*pop.label());
  return Utility{kind, std::vector<Value>(y.begin(), y.end())};
}

absl::StatusOr<Utility> Utility::Agreement(const Program& p,
                                           const Population& pop,
                                           bool allow_protected) {
  absl::StatusOr<std::vector<Value>> out =
      ProgramValues(p, pop, allow_protected);
  if (!out.ok()) return out.status();
  return Utility{UtilityKind::kAccuracy01, *std::move(out)};
}

absl::StatusOr<Utility> DefaultUtility(const Program& p, const Population& pop,
                                       bool allow_protected) {
  if (!pop.label().has_value()) return Utility::Agreement(p, pop, allow_protected);
  const std::vector<Value> domain = pop.Domain(*pop.label());
  const bool discrete =
      domain.size() <= 32 && std::all_of(domain.begin(), domain.end(), [](Value y) {
        return y == std::floor(y);
      });
  return Utility::FromLabel(
      pop, discrete ? UtilityKind::kAccuracy01 : UtilityKind::kNegMse);
}

double Utility::Score(std::span<const Value> outputs) const {
  PA_CHECK(outputs.size() == target.size(), "utility target size mismatch");
  if (outputs.empty()) return 0;
  double total = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    if (kind == UtilityKind::kAccuracy01) {
      total += outputs[i] == target[i];
    } else {
      const double e = outputs[i] - target[i];
      total -= e * e;
    }
  }
  return total / static_cast<double>(outputs.size());
}

absl::StatusOr<double> Utility::Evaluate(const Program& p,
                                         const Population& pop,
                                         bool allow_protected) const {
  absl::StatusOr<std::vector<Value>> out =
      ProgramValues(p, pop, allow_protected);
  if (!out.ok()) return out.status();
  return Score(*out);
}

namespace {

absl::Status CheckWitness(const Program& p, const Witness& w) {
  for (const Position& q : w.positions) {
    absl::StatusOr<ExprPtr> s = SubtermAt(p, q);
    if (!s.ok() || Fingerprint(**s) != w.fingerprint) {
      return absl::FailedPreconditionError(
          StrCat("stale witness: ", w.p1_text, " is no longer at ",
                 q.ToString()));
    }
  }
  return absl::OkStatus();
}

// The position of `rel` (a position inside the subterm at `q`) in the
// whole expression. A subset step at the end of `q` denotes a synthetic
// n-ary node whose child j is operand subset[j-1] of the real node.
Position Inside(const Position& q, const Position& rel) {
  if (!q.ends_in_subset() || rel.is_root()) return q.Append(rel);
  const std::vector<int>& sel = q.steps().back().subset();
  Position base = q.Parent();
  const Step& first = rel.steps().front();
  std::vector<Step> rest(rel.steps().begin() + 1, rel.steps().end());
  if (first.is_subset()) {
    std::vector<int> mapped;
    for (int j : first.subset()) mapped.push_back(sel[j - 1]);
    return base.Subset(std::move(mapped));
  }
  return base.Child(sel[first.index() - 1]).Append(Position(std::move(rest)));
}

bool MentionsAnyVariable(const Expr& e) { return !FreeVariables(e).empty(); }

}  // namespace

absl::StatusOr<std::vector<Decomposition>> LocalDecompositions(
    const Program& p, const Witness& w, int max_subset_size) {
  absl::Status fresh = CheckWitness(p, w);
  if (!fresh.ok()) return fresh;
  std::vector<Position> ws = w.positions;
  std::sort(ws.begin(), ws.end());

  std::vector<Decomposition> out;
  std::set<std::vector<Position>> seen;
  auto add = [&](std::vector<Position> qs) -> absl::Status {
    std::sort(qs.begin(), qs.end());
    if (seen.count(qs)) return absl::OkStatus();
    absl::StatusOr<Decomposition> d = MakeDecomposition(p, qs);
    if (!d.ok()) return d.status();
    seen.insert(d->positions);
    out.push_back(*std::move(d));
    return absl::OkStatus();
  };

  absl::StatusOr<ExprPtr> p1 = SubtermAt(p, ws.front());
  if (!p1.ok()) return p1.status();
  for (const Position& rel : AllPositions(**p1, max_subset_size)) {
    absl::StatusOr<ExprPtr> sub = SubtermAt(*p1, rel);
    if (!sub.ok()) return sub.status();
    if (!MentionsAnyVariable(**sub)) continue;
    std::vector<Position> qs;
    for (const Position& q : ws) qs.push_back(Inside(q, rel));
    if (!add(qs).ok()) {
      // Occurrences whose operands are ordered differently: fall back to
      // the first occurrence.
      absl::Status st = add({Inside(ws.front(), rel)});
      if (!st.ok()) return st;
    }
  }

  for (const Position& q : ws) {
    if (q.is_root() || q.ends_in_subset() || q.steps().back().index() != 1) {
      continue;
    }
    const Position ite = q.Parent();
    absl::StatusOr<ExprPtr> node = SubtermAt(p, ite);
    if (!node.ok()) return node.status();
    if ((*node)->kind() != ExprKind::kIte) continue;
    for (int branch : {2, 3}) {
      const Position b = ite.Child(branch);
      const ExprPtr& term = (*node)->child(branch - 1);
      for (const Position& rel : AllPositions(*term, max_subset_size)) {
        absl::StatusOr<ExprPtr> sub = SubtermAt(term, rel);
        if (!sub.ok()) return sub.status();
        if (!MentionsAnyVariable(**sub)) continue;
        absl::Status st = add({b.Append(rel)});
        if (!st.ok()) return st;
      }
    }
  }
  return out;
}

namespace {

// Smallest value with the highest count among `rows` of `target`.
Value Mode(std::span<const Value> target, std::span<const RowIndex> rows) {
  std::map<Value, size_t> counts;
  for (RowIndex r : rows) ++counts[target[r]];
  Value best = 0;
  size_t best_count = 0;
  for (const auto& [v, c] : counts) {
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  }
  return best;
}

Value Mean(std::span<const Value> target, std::span<const RowIndex> rows) {
  double total = 0;
  for (RowIndex r : rows) total += target[r];
  return total / static_cast<double>(rows.size());
}

absl::StatusOr<double> UtilityWith(const Decomposition& d, const ExprPtr& c,
                                   const Population& pop, const Utility& v,
                                   bool allow_protected) {
  absl::StatusOr<ExprPtr> body = ReplaceAllAt(d.parent.body(), c, d.positions);
  if (!body.ok()) return body.status();
  absl::StatusOr<Program> q = d.parent.WithBody(*body);
  if (!q.ok()) return q.status();
  return v.Evaluate(*q, pop, allow_protected);
}

}  // namespace

absl::StatusOr<ConstantChoice> OptimalConstant(const Decomposition& d,
                                               const Population& pop,
                                               const Utility& v,
                                               bool allow_protected) {
  if (v.target.size() != pop.size()) {
    return absl::InvalidArgumentError("utility target does not fit population");
  }
  std::vector<ExprPtr> candidates;
  if (d.subterm()->type() == Type::kBool) {
    candidates = {Expr::Bool(false), Expr::Bool(true)};
  } else {
    absl::StatusOr<std::vector<RowIndex>> rows =
        RowsSatisfying(d, pop, allow_protected);
    if (!rows.ok()) return rows.status();
    const bool tail = std::all_of(
        d.positions.begin(), d.positions.end(),
        [&](const Position& q) { return IsTailPosition(d.parent.expr(), q); });
    std::vector<RowIndex> over = *rows;
    if (over.empty()) over = AllRows(pop.size());
    if (tail) {
      const Value c = v.kind == UtilityKind::kAccuracy01 ? Mode(v.target, over)
                                                         : Mean(v.target, over);
      candidates = {Expr::Real(c)};
    } else {
      std::set<Value> values(v.target.begin(), v.target.end());
      absl::StatusOr<std::vector<Value>> p1 =
          ProgramValues(d.p1, pop, allow_protected);
      if (!p1.ok()) return p1.status();
      for (RowIndex r : over) values.insert((*p1)[r]);
      if (v.kind == UtilityKind::kNegMse) values.insert(Mean(v.target, over));
      for (Value x : values) candidates.push_back(Expr::Real(x));
    }
  }
  ConstantChoice best;
  for (const ExprPtr& c : candidates) {
    absl::StatusOr<double> u = UtilityWith(d, c, pop, v, allow_protected);
    if (!u.ok()) return u.status();
    if (best.constant == nullptr || *u > best.utility) best = {c, *u};
  }
  return best;
}

absl::StatusOr<Program> ApplyEdit(const Program& p, const Edit& e) {
  for (const Position& q : e.positions) {
    absl::StatusOr<ExprPtr> s = SubtermAt(p, q);
    if (!s.ok()) return s.status();
    if (Print(**s) != e.before) {
      return absl::FailedPreconditionError(
          StrCat("edit expects ", e.before, " at ", q.ToString(), ", found ",
                 Print(**s)));
    }
  }
  absl::StatusOr<ExprPtr> c = ParseExpr(e.after, {});
  if (!c.ok()) return c.status();
  absl::StatusOr<ExprPtr> body = ReplaceAllAt(p.body(), *c, e.positions);
  if (!body.ok()) return body.status();
  return p.WithBody(*body);
}

namespace {

// Whether the witness at `positions` is gone or below threshold in `q`.
absl::StatusOr<bool> Resolved(const Program& q,
                              const std::vector<Position>& positions,
                              const DetectionConfig& cfg,
                              ProgramContext& ctx) {
  auto measure = [&](std::vector<Position> qs) -> absl::StatusOr<bool> {
    absl::StatusOr<Decomposition> d = MakeDecomposition(q, std::move(qs));
    if (!d.ok()) return true;  // no longer a decomposition of q
    if (!MentionsAnyVariable(*d->subterm())) return true;
    absl::StatusOr<MeasureCache> cache = BuildCache(*d, ctx);
    if (!cache.ok()) return cache.status();
    if (cache->association <= cfg.epsilon) return true;
    absl::StatusOr<double> infl =
        cfg.estimator == Estimator::kExact
            ? InfluenceExact(*d, ctx, *cache)
            : InfluenceSampled(*d, ctx, *cache, cfg.sampling);
    if (!infl.ok()) return infl.status();
    return *infl <= cfg.delta;
  };
  absl::StatusOr<bool> all = measure(positions);
  if (!all.ok() || *all || positions.size() == 1) return all;
  for (const Position& p : positions) {
    absl::StatusOr<bool> one = measure({p});
    if (!one.ok() || !*one) return one;
  }
  return true;
}

}  // namespace

absl::StatusOr<std::vector<RepairCandidate>> QualifyingRepairs(
    const Program& p, const Witness& w, const Population& pop,
    const DetectionConfig& cfg, const Utility& v) {
  absl::StatusOr<std::vector<Decomposition>> locals =
      LocalDecompositions(p, w, cfg.limits.max_subset_size);
  if (!locals.ok()) return locals.status();
  const bool allow = cfg.measure.allow_protected;
  std::vector<RepairCandidate> out;
  for (const Decomposition& d : *locals) {
    absl::StatusOr<ConstantChoice> c = OptimalConstant(d, pop, v, allow);
    if (!c.ok()) return c.status();
    absl::StatusOr<ExprPtr> body =
        ReplaceAllAt(p.body(), c->constant, d.positions);
    if (!body.ok()) return body.status();
    absl::StatusOr<Program> q = p.WithBody(*body);
    if (!q.ok()) return q.status();
    absl::StatusOr<std::unique_ptr<ProgramContext>> ctx =
        ProgramContext::Create(*q, pop, cfg.measure);
    if (!ctx.ok()) return ctx.status();
    absl::StatusOr<bool> ok = Resolved(*q, w.positions, cfg, **ctx);
    if (!ok.ok()) return ok.status();
    if (!*ok) continue;
    out.push_back(RepairCandidate{
        *std::move(q),
        Edit{d.positions, Print(*d.subterm()), Print(*c->constant)},
        c->utility});
  }
  // Replacing p1 itself always removes the witness.
  PA_CHECK(!out.empty(), "no local repair candidate qualified");
  return out;
}

absl::StatusOr<RepairCandidate> ProxyRepair(const Program& p, const Witness& w,
                                            const Population& pop,
                                            const DetectionConfig& cfg,
                                            const Utility& v) {
  absl::StatusOr<std::vector<RepairCandidate>> all =
      QualifyingRepairs(p, w, pop, cfg, v);
  if (!all.ok()) return all.status();
  size_t best = 0;
  for (size_t i = 1; i < all->size(); ++i) {
    if ((*all)[i].utility > (*all)[best].utility) best = i;
  }
  return std::move((*all)[best]);
}

absl::StatusOr<RepairOutcome> RepairLoop(const Program& p,
                                         const Population& pop,
                                         const DetectionConfig& cfg,
                                         const Oracle& oracle,
                                         const Utility& v,
                                         UndecidedPolicy undecided) {
  RepairOutcome out{p, {}, 0, {}, false, {}};
  const size_t budget = p.size();
  while (true) {
    absl::StatusOr<DetectionResult> found = ProxyDetect(out.repaired, pop, cfg);
    if (!found.ok()) return found.status();
    std::vector<const Witness*> denied;
    std::vector<Witness> pending;
    for (const Witness& w : found->witnesses) {
      Verdict verdict = oracle(w);
      if (verdict == Verdict::kUndecided) {
        if (undecided == UndecidedPolicy::kSuspend) {
          pending.push_back(w);
          continue;
        }
        verdict = undecided == UndecidedPolicy::kDeny ? Verdict::kInappropriate
                                                      : Verdict::kAppropriate;
      }
      if (verdict == Verdict::kInappropriate) denied.push_back(&w);
    }
    if (!pending.empty()) {
      out.suspended = true;
      out.pending = std::move(pending);
      out.residual_witnesses = std::move(found->witnesses);
      return out;
    }
    if (denied.empty()) {
      out.residual_witnesses = std::move(found->witnesses);
      return out;
    }
    PA_CHECK(out.iterations < budget, "repair exceeded its iteration bound");
    absl::StatusOr<RepairCandidate> c =
        ProxyRepair(out.repaired, *denied.front(), pop, cfg, v);
    if (!c.ok()) return c.status();
    PA_CHECK(c->program.expr().non_constant_size() <
                 out.repaired.expr().non_constant_size(),
             "repair edit did not shrink the program");
    PA_CHECK(c->program.size() <= out.repaired.size(),
             "repair edit grew the program");
    out.repaired = std::move(c->program);
    out.edits.push_back(std::move(c->edit));
    ++out.iterations;
  }
}

}  // namespace proxy_audit
