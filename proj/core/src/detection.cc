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

#include "proxy_audit/detection.h"

#include <algorithm>
#include <chrono>
#include <map>

#include "absl/status/status.h"
#include "proxy_audit/canonical.h"
#include "proxy_audit/random.h"
#include "proxy_audit/syntax.h"
#include "str.h"

namespace proxy_audit {

absl::Status ValidateConfig(const DetectionConfig& cfg) {
  if (!(cfg.epsilon >= 0 && cfg.epsilon <= 1)) {
    return absl::InvalidArgumentError("epsilon must lie in [0, 1]");
  }
  if (!(cfg.delta >= 0 && cfg.delta <= 1)) {
    return absl::InvalidArgumentError("delta must lie in [0, 1]");
  }
  if (cfg.estimator == Estimator::kSampled &&
      !(cfg.sampling.alpha > 0 && cfg.sampling.alpha < 1 &&
        cfg.sampling.beta > 0 && cfg.sampling.beta < 1)) {
    return absl::InvalidArgumentError("alpha and beta must lie in (0, 1)");
  }
  if (cfg.limits.max_subset_size < 1 || cfg.limits.max_decompositions < 1) {
    return absl::InvalidArgumentError("enumeration limits must be positive");
  }
  return absl::OkStatus();
}

bool WitnessBefore(const Witness& a, const Witness& b) {
  if (a.association != b.association) return a.association > b.association;
  if (a.influence != b.influence) return a.influence > b.influence;
  if (a.fingerprint != b.fingerprint) return a.fingerprint < b.fingerprint;
  return a.positions < b.positions;
}

Witness MakeWitness(const Decomposition& d, double association,
                    double influence, double reach_prob) {
  return Witness{Fingerprint(d.p1.expr()),
                 Print(d.p1),
                 Print(d.p2),
                 d.positions,
                 association,
                 influence,
                 reach_prob,
                 d.p1.size(),
                 FreeVariables(d.p1.expr()),
                 d};
}

namespace {

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string PositionsKey(const std::vector<Position>& qs) {
  std::string key;
  for (const Position& q : qs) StrAppend(&key, q.ToString(), ";");
  return key;
}

void BranchBalance(const Expr& e, size_t id, const Reachability& reach,
                   double& balance) {
  if (e.kind() == ExprKind::kIte && !reach.rows[id].empty()) {
    const size_t then_id = id + 1 + e.child(0)->size();
    const size_t else_id = then_id + e.child(1)->size();
    const double total = static_cast<double>(reach.rows[id].size());
    const double lo = static_cast<double>(
        std::min(reach.rows[then_id].size(), reach.rows[else_id].size()));
    balance = std::min(balance, lo / total);
  }
  size_t child = id + 1;
  for (const ExprPtr& c : e.children()) {
    BranchBalance(*c, child, reach, balance);
    child += c->size();
  }
}

void LinkParents(std::vector<SubexprRecord>& records) {
  std::map<Position, size_t> singleton;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].positions.size() == 1) {
      singleton.emplace(records[i].positions.front(), i);
    }
  }
  for (size_t i = 0; i < records.size(); ++i) {
    const std::vector<Position>& qs = records[i].positions;
    if (qs.size() > 1) {
      auto it = singleton.find(qs.front());
      if (it != singleton.end()) records[i].parent = it->second;
      continue;
    }
    Position q = qs.front();
    while (!q.is_root()) {
      q = q.Parent();
      auto it = singleton.find(q);
      if (it != singleton.end()) {
        records[i].parent = it->second;
        break;
      }
    }
  }
}

}  // namespace

absl::StatusOr<DetectionResult> ProxyDetect(const Program& p,
                                            const Population& pop,
                                            const DetectionConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  absl::Status valid = ValidateConfig(cfg);
  if (!valid.ok()) return valid;
  absl::StatusOr<std::unique_ptr<ProgramContext>> ctx =
      ProgramContext::Create(p, pop, cfg.measure);
  if (!ctx.ok()) return ctx.status();

  DetectionResult result;
  EnumerationResult decs = EnumerateDecompositions(p, cfg.limits);
  result.stats.incomplete = decs.incomplete;
  result.stats.decomposition_count = decs.decompositions.size();
  result.stats.dataset_size = pop.size();
  result.stats.program_size = p.size();
  result.subexpressions.reserve(decs.decompositions.size());

  for (const Decomposition& d : decs.decompositions) {
    absl::StatusOr<MeasureCache> cache = BuildCache(d, **ctx);
    if (!cache.ok()) {
      return absl::Status(
          cache.status().code(),
          StrCat("measuring ", Print(d.p1.expr()), ": ",
                 std::string(cache.status().message())));
    }
    result.stats.max_range = std::max(result.stats.max_range, cache->range.size());

    SubexprRecord rec;
    rec.positions = d.positions;
    rec.fingerprint = Fingerprint(d.p1.expr());
    rec.p1_text = Print(d.p1.expr());
    rec.association = cache->association;
    rec.reach_prob = cache->reach_prob;
    rec.subterm_size = d.p1.size();

    const bool associated = cache->association >= cfg.epsilon;
    if (associated || cfg.measure_all_influences) {
      absl::StatusOr<double> infl;
      if (cfg.estimator == Estimator::kExact) {
        infl = InfluenceExact(d, **ctx, *cache);
      } else {
        EstimatorConfig ec = cfg.sampling;
        ec.seed = Mix64(cfg.sampling.seed ^
                        Fnv1a(StrCat(rec.fingerprint, PositionsKey(d.positions))));
        infl = InfluenceSampled(d, **ctx, *cache, ec);
      }
      if (!infl.ok()) return infl.status();
      ++result.stats.influence_evaluations;
      rec.influence = *infl;
      if (associated && *infl >= cfg.delta) {
        result.witnesses.push_back(
            MakeWitness(d, cache->association, *infl, cache->reach_prob));
      }
    }
    result.subexpressions.push_back(std::move(rec));
  }
  LinkParents(result.subexpressions);
  std::sort(result.witnesses.begin(), result.witnesses.end(), WitnessBefore);

  double balance = 0.5;
  BranchBalance(p.expr(), 0, (*ctx)->reach(), balance);
  result.stats.min_branch_balance = balance;
  result.stats.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

absl::StatusOr<std::vector<Witness>> ReferenceDetect(
    const Program& p, const Population& pop, const DetectionConfig& cfg) {
  absl::Status valid = ValidateConfig(cfg);
  if (!valid.ok()) return valid;
  absl::StatusOr<std::vector<std::vector<Value>>> rows =
      pop.ParamRows(p, cfg.measure.allow_protected);
  if (!rows.ok()) return rows.status();
  const std::vector<Value> z =
      BinForAssociation(pop.protected_values(), cfg.measure.bins);

  std::vector<Witness> out;
  for (const Decomposition& d :
       EnumerateDecompositions(p, cfg.limits).decompositions) {
    std::vector<Value> x(rows->size());
    for (size_t i = 0; i < rows->size(); ++i) {
      absl::StatusOr<Value> v = Evaluate(d.p1, (*rows)[i]);
      if (!v.ok()) return v.status();
      x[i] = *v;
    }
    const double assoc =
        Association(BinForAssociation(x, cfg.measure.bins), z);
    if (assoc < cfg.epsilon) continue;
    absl::StatusOr<double> infl =
        InfluenceDirect(d, pop, cfg.measure.allow_protected);
    if (!infl.ok()) return infl.status();
    if (*infl < cfg.delta) continue;
    // A row reaches a position when every ite on the path takes the branch
    // the path descends into.
    size_t reached = 0;
    for (const std::vector<Value>& row : *rows) {
      RowEnv env(p, row);
      bool hit = false;
      for (const Position& q : d.positions) {
        const Expr* cur = &p.expr();
        bool ok = true;
        for (const Step& s : q.steps()) {
          if (s.is_subset()) break;
          if (cur->kind() == ExprKind::kIte && s.index() != 1) {
            absl::StatusOr<Value> c = Evaluate(*cur->child(0), env);
            if (!c.ok()) return c.status();
            if ((*c != 0) != (s.index() == 2)) {
              ok = false;
              break;
            }
          }
          cur = cur->child(s.index() - 1).get();
        }
        hit = hit || ok;
      }
      reached += hit;
    }
    out.push_back(MakeWitness(d, assoc, *infl,
                              static_cast<double>(reached) /
                                  static_cast<double>(rows->size())));
  }
  std::sort(out.begin(), out.end(), WitnessBefore);
  return out;
}

}  // namespace proxy_audit
