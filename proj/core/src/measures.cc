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

#include "proxy_audit/measures.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "proxy_audit/canonical.h"
#include "proxy_audit/random.h"
#include "str.h"

namespace proxy_audit {

Codes Encode(std::span<const Value> values) {
  std::vector<Value> levels(values.begin(), values.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  Codes out;
  out.levels = static_cast<uint32_t>(levels.size());
  out.codes.reserve(values.size());
  for (Value v : values) {
    out.codes.push_back(static_cast<uint32_t>(
        std::lower_bound(levels.begin(), levels.end(), v) - levels.begin()));
  }
  return out;
}

ContingencyTable Tabulate(const Codes& x, const Codes& z) {
  ContingencyTable t;
  t.x_levels = x.levels;
  t.z_levels = z.levels;
  t.counts.assign(static_cast<size_t>(x.levels) * z.levels, 0);
  const size_t n = std::min(x.codes.size(), z.codes.size());
  for (size_t i = 0; i < n; ++i) {
    ++t.counts[static_cast<size_t>(x.codes[i]) * z.levels + z.codes[i]];
  }
  t.total = n;
  return t;
}

namespace {

// Σ c log2 c over nonzero counts.
double CLogC(std::span<const uint64_t> counts) {
  double s = 0;
  for (uint64_t c : counts) {
    if (c > 0) s += static_cast<double>(c) * std::log2(static_cast<double>(c));
  }
  return s;
}

}  // namespace

Entropies EntropiesOf(const ContingencyTable& t) {
  Entropies h;
  if (t.total == 0) return h;
  std::vector<uint64_t> mx(t.x_levels, 0), mz(t.z_levels, 0);
  for (uint32_t x = 0; x < t.x_levels; ++x) {
    for (uint32_t z = 0; z < t.z_levels; ++z) {
      mx[x] += t.at(x, z);
      mz[z] += t.at(x, z);
    }
  }
  const double n = static_cast<double>(t.total);
  const double log_n = std::log2(n);
  h.x = log_n - CLogC(mx) / n;
  h.z = log_n - CLogC(mz) / n;
  h.joint = log_n - CLogC(t.counts) / n;
  return h;
}

namespace {

// Each occurring value of X co-occurs with exactly one value of Z and vice
// versa, i.e. each determines the other.
bool IsBijective(const ContingencyTable& t) {
  std::vector<int> per_x(t.x_levels, 0), per_z(t.z_levels, 0);
  for (uint32_t x = 0; x < t.x_levels; ++x) {
    for (uint32_t z = 0; z < t.z_levels; ++z) {
      if (t.at(x, z) > 0) {
        ++per_x[x];
        ++per_z[z];
      }
    }
  }
  for (int c : per_x) {
    if (c > 1) return false;
  }
  for (int c : per_z) {
    if (c > 1) return false;
  }
  return true;
}

}  // namespace

double Association(const ContingencyTable& t) {
  const Entropies h = EntropiesOf(t);
  if (h.joint <= 0) return 0;
  if (IsBijective(t)) return 1;
  const double d = (h.x + h.z - h.joint) / h.joint;
  return std::clamp(d, 0.0, 1.0);
}

double Association(std::span<const Value> x, std::span<const Value> z) {
  return Association(Tabulate(Encode(x), Encode(z)));
}

size_t HoeffdingSampleSize(double alpha, double beta) {
  const double n = std::log(2.0 / beta) / (2.0 * alpha * alpha);
  return std::max<size_t>(1, static_cast<size_t>(std::ceil(n)));
}

absl::StatusOr<std::unique_ptr<ProgramContext>> ProgramContext::Create(
    const Program& p, const Population& pop, const MeasureOptions& options) {
  std::unique_ptr<ProgramContext> ctx(new ProgramContext(p, pop, options));
  absl::StatusOr<ColumnEnv> env = pop.Bind(p, options.allow_protected);
  if (!env.ok()) return env.status();
  ctx->env_ = *std::move(env);
  absl::StatusOr<std::vector<Value>> out =
      EvaluateBatch(p.expr(), ctx->env_, AllRows(pop.size()), &ctx->reach_);
  if (!out.ok()) return out.status();
  ctx->outputs_ = *std::move(out);
  ctx->z_codes_ =
      Encode(BinForAssociation(pop.protected_values(), options.bins));
  return ctx;
}

absl::StatusOr<const std::vector<Value>*> ProgramContext::SubtermValues(
    const Expr& e) {
  std::string key = CanonicalText(e);
  auto it = memo_.find(key);
  if (it != memo_.end()) return &it->second;
  absl::StatusOr<std::vector<Value>> v =
      EvaluateBatch(e, env_, AllRows(pop_.size()));
  if (!v.ok()) return v.status();
  return &memo_.emplace(std::move(key), *std::move(v)).first->second;
}

absl::StatusOr<MeasureCache> BuildCache(const Decomposition& d,
                                        ProgramContext& ctx) {
  MeasureCache cache;
  absl::StatusOr<const std::vector<Value>*> values =
      ctx.SubtermValues(d.p1.expr());
  if (!values.ok()) return values.status();
  cache.p1_values = *values;
  const Codes x = Encode(BinForAssociation(**values, ctx.options().bins));
  cache.table = Tabulate(x, ctx.z_codes());
  cache.association = Association(cache.table);

  for (const Position& q : d.positions) {
    absl::StatusOr<size_t> id = PreorderIndex(ctx.program().expr(), q);
    if (!id.ok()) return id.status();
    const std::vector<RowIndex>& rows = ctx.reach().rows[*id];
    std::vector<RowIndex> merged;
    merged.reserve(cache.reached_rows.size() + rows.size());
    std::set_union(cache.reached_rows.begin(), cache.reached_rows.end(),
                   rows.begin(), rows.end(), std::back_inserter(merged));
    cache.reached_rows = std::move(merged);
  }
  const double n = static_cast<double>(ctx.population().size());
  cache.reach_prob = static_cast<double>(cache.reached_rows.size()) / n;

  std::vector<Value> sorted = **values;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    cache.range.emplace_back(sorted[i], static_cast<double>(j - i) / n);
    i = j;
  }
  return cache;
}

absl::StatusOr<double> InfluenceExact(const Decomposition& d,
                                      const ProgramContext& ctx,
                                      const MeasureCache& cache) {
  if (cache.reached_rows.empty() || cache.range.size() < 2) return 0.0;
  const std::vector<Value>& out = ctx.outputs();
  double total = 0;
  for (const auto& [y, prob] : cache.range) {
    ColumnEnv env = ctx.env();
    env.BindConstant(d.fresh_var, y);
    absl::StatusOr<std::vector<Value>> v =
        EvaluateBatch(d.p2.expr(), env, cache.reached_rows);
    if (!v.ok()) return v.status();
    size_t diff = 0;
    for (size_t i = 0; i < cache.reached_rows.size(); ++i) {
      diff += (*v)[i] != out[cache.reached_rows[i]];
    }
    total += prob * static_cast<double>(diff);
  }
  return total / static_cast<double>(ctx.population().size());
}

absl::StatusOr<double> InfluenceSampled(const Decomposition& d,
                                        const ProgramContext& ctx,
                                        const MeasureCache& cache,
                                        const EstimatorConfig& config) {
  if (cache.range.size() < 2) return 0.0;
  const size_t n = HoeffdingSampleSize(config.alpha, config.beta);
  const Population& pop = ctx.population();
  Rng rng = Substream(config.seed, 0x696e666c);
  std::vector<RowIndex> xs(n);
  std::vector<Value> ys(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = static_cast<RowIndex>(UniformIndex(rng, pop.size()));
    ys[i] = (*cache.p1_values)[UniformIndex(rng, pop.size())];
  }
  std::vector<std::vector<Value>> gathered(d.parent.params().size());
  ColumnEnv env;
  for (size_t k = 0; k < d.parent.params().size(); ++k) {
    const std::string& name = d.parent.params()[k].name;
    std::span<const Value> col = pop.values(name);
    gathered[k].reserve(n);
    for (RowIndex r : xs) gathered[k].push_back(col[r]);
    env.BindColumn(name, gathered[k]);
  }
  env.BindColumn(d.fresh_var, ys);
  absl::StatusOr<std::vector<Value>> v =
      EvaluateBatch(d.p2.expr(), env, AllRows(n));
  if (!v.ok()) return v.status();
  size_t diff = 0;
  for (size_t i = 0; i < n; ++i) diff += (*v)[i] != ctx.outputs()[xs[i]];
  return static_cast<double>(diff) / static_cast<double>(n);
}

absl::StatusOr<double> InfluenceDirect(const Decomposition& d,
                                       const Population& pop,
                                       bool allow_protected) {
  absl::StatusOr<std::vector<std::vector<Value>>> rows =
      pop.ParamRows(d.parent, allow_protected);
  if (!rows.ok()) return rows.status();
  const size_t n = rows->size();
  std::vector<Value> p1(n), p(n);
  for (size_t i = 0; i < n; ++i) {
    absl::StatusOr<Value> a = Evaluate(d.p1, (*rows)[i]);
    if (!a.ok()) return a.status();
    p1[i] = *a;
    absl::StatusOr<Value> b = Evaluate(d.parent, (*rows)[i]);
    if (!b.ok()) return b.status();
    p[i] = *b;
  }
  uint64_t diff = 0;
  for (size_t i = 0; i < n; ++i) {
    RowEnv env(d.parent, (*rows)[i]);
    for (size_t j = 0; j < n; ++j) {
      env.Bind(d.fresh_var, p1[j]);
      absl::StatusOr<Value> v = Evaluate(d.p2.expr(), env);
      if (!v.ok()) return v.status();
      diff += *v != p[i];
    }
  }
  return static_cast<double>(diff) / (static_cast<double>(n) * n);
}

}  // namespace proxy_audit
