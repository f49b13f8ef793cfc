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

#ifndef PROXY_AUDIT_BENCHMARKS_WORKLOADS_H_
#define PROXY_AUDIT_BENCHMARKS_WORKLOADS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "proxy_audit/dataset.h"
#include "proxy_audit/expr.h"

namespace proxy_audit::workloads {

inline std::string Feature(int i) { return "x" + std::to_string(i + 1); }

// Complete tree of the given depth; level d tests x{d+1} <= 1.5 and leaves
// alternate between 0 and 1.
inline ExprPtr BalancedTreeBody(int depth, int level = 0, int* leaf = nullptr) {
  int counter = 0;
  if (leaf == nullptr) leaf = &counter;
  if (level == depth) return Expr::Real((*leaf)++ % 2);
  ExprPtr guard =
      Expr::Rel(RelOp::kLe, Expr::Var(Feature(level)), Expr::Real(1.5));
  ExprPtr then = BalancedTreeBody(depth, level + 1, leaf);
  ExprPtr other = BalancedTreeBody(depth, level + 1, leaf);
  return Expr::Ite(guard, then, other);
}

inline Program BalancedTree(int depth) {
  std::vector<Param> params;
  for (int i = 0; i < depth; ++i) params.push_back({Feature(i), Type::kReal});
  return Program::CreateOrDie(params, BalancedTreeBody(depth));
}

// `rows` rows over x1..x{features} with levels 0..3 and a binary protected
// column z that agrees with [x1 >= 2] on 80% of rows.
inline Population Rows(size_t rows, int features, uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::vector<Column> cols(features + 1);
  for (int f = 0; f < features; ++f) cols[f].name = Feature(f);
  cols[features].name = "z";
  for (size_t r = 0; r < rows; ++r) {
    for (int f = 0; f < features; ++f) {
      cols[f].values.push_back(static_cast<double>(rng() % 4));
    }
    const bool high = cols[0].values.back() >= 2;
    cols[features].values.push_back((rng() % 5 == 0) != high ? 1 : 0);
  }
  return Population::Create(std::move(cols), "z", std::nullopt).value();
}

}  // namespace proxy_audit::workloads

#endif  // PROXY_AUDIT_BENCHMARKS_WORKLOADS_H_
