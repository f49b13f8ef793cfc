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

#include "support/injected.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "proxy_audit/measures.h"
#include "support/random_programs.h"

namespace proxy_audit::testing {
namespace {

// Z = [h1 + h2 >= 3] for levels 0..3, as a tree.
ExprPtr ZTree() {
  auto le = [](const char* f, double t) {
    return Expr::Rel(RelOp::kLe, Expr::Var(f), Expr::Real(t));
  };
  auto leaf = [](double v) { return Expr::Real(v); };
  auto split = [&](double t) {
    return Expr::Ite(le("h2", t), leaf(0), leaf(1));
  };
  return Expr::Ite(
      le("h1", 0.5), split(2.5),
      Expr::Ite(le("h1", 1.5), split(1.5),
                Expr::Ite(le("h1", 2.5), split(0.5), leaf(1))));
}

// Complete tree of the given depth; level d splits g{d+1} at its median.
ExprPtr GradeTree(Rng& rng, int level, int depth) {
  if (level == depth) return Expr::Real(static_cast<double>(rng() % 4));
  ExprPtr guard = Expr::Rel(RelOp::kLe, Expr::Var("g" + std::to_string(level + 1)),
                            Expr::Real(1.5));
  ExprPtr then = GradeTree(rng, level + 1, depth);
  return Expr::Ite(guard, then, GradeTree(rng, level + 1, depth));
}

void Die(const absl::Status& s) {
  std::fprintf(stderr, "injected case: %s\n", std::string(s.message()).c_str());
  std::abort();
}

}  // namespace

InjectedCase MakeInjectedCase(uint64_t seed, int graft_depth) {
  Rng rng(seed * 7919 + graft_depth);
  std::vector<Column> cols;
  for (const char* name : {"g1", "g2", "g3", "g4", "g5", "h1", "h2"}) {
    Column c;
    c.name = name;
    for (int i = 0; i < 500; ++i) c.values.push_back(rng() % kFeatureLevels);
    cols.push_back(std::move(c));
  }
  Column z;
  z.name = "z";
  for (int i = 0; i < 500; ++i) {
    z.values.push_back(cols[5].values[i] + cols[6].values[i] >= 3 ? 1 : 0);
  }
  cols.push_back(std::move(z));
  absl::StatusOr<Population> pop = Population::Create(cols, "z", std::nullopt);
  if (!pop.ok()) Die(pop.status());

  std::vector<Param> params =
      RealParams({"g1", "g2", "g3", "g4", "g5", "h1", "h2"});
  Program original = Program::CreateOrDie(params, GradeTree(rng, 0, 5));

  Position at;
  for (int d = 0; d < graft_depth; ++d) at = at.Child(2 + rng() % 2);
  absl::StatusOr<Program> grafted = ReplaceAt(original, ZTree(), at);
  if (!grafted.ok()) Die(grafted.status());

  absl::StatusOr<Decomposition> dec = MakeDecomposition(*grafted, {at});
  if (!dec.ok()) Die(dec.status());
  absl::StatusOr<std::unique_ptr<ProgramContext>> ctx =
      ProgramContext::Create(*grafted, *pop, {});
  if (!ctx.ok()) Die(ctx.status());
  absl::StatusOr<MeasureCache> cache = BuildCache(*dec, **ctx);
  if (!cache.ok()) Die(cache.status());
  absl::StatusOr<double> infl = InfluenceExact(*dec, **ctx, *cache);
  if (!infl.ok()) Die(infl.status());
  return {*std::move(pop), original, *std::move(grafted), at, *infl};
}

InjectedRepair RepairInjected(const InjectedCase& c) {
  DetectionConfig cfg;
  cfg.epsilon = 0.01;
  cfg.delta = 0.01;
  auto inside = [&](const Witness& w) {
    return std::all_of(w.positions.begin(), w.positions.end(),
                       [&](const Position& q) { return c.graft.IsPrefixOf(q); });
  };
  Oracle oracle = [&](const Witness& w) {
    return inside(w) ? Verdict::kInappropriate : Verdict::kAppropriate;
  };
  absl::StatusOr<Utility> v = Utility::Agreement(c.grafted, c.pop, false);
  if (!v.ok()) Die(v.status());
  absl::StatusOr<RepairOutcome> out =
      RepairLoop(c.grafted, c.pop, cfg, oracle, *v, UndecidedPolicy::kSuspend);
  if (!out.ok()) Die(out.status());
  absl::StatusOr<double> agreement = v->Evaluate(out->repaired, c.pop, false);
  if (!agreement.ok()) Die(agreement.status());
  bool denied_left = false;
  for (const Witness& w : out->residual_witnesses) {
    denied_left = denied_left || inside(w);
  }
  return {*std::move(out), *agreement, denied_left};
}

namespace {

std::vector<double> Ranks(std::span<const double> x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i + j - 1)) / 2.0 + 1;
    for (size_t k = i; k < j; ++k) rank[order[k]] = avg;
    i = j;
  }
  return rank;
}

}  // namespace

double Spearman(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> rx = Ranks(x), ry = Ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx == 0 || syy == 0 ? 0 : sxy / std::sqrt(sxx * syy);
}

}  // namespace proxy_audit::testing
