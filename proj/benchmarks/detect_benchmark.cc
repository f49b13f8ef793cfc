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

#include <benchmark/benchmark.h>

#include "proxy_audit/detection.h"
#include "proxy_audit/measures.h"
#include "proxy_audit/repair.h"
#include "workloads.h"

namespace proxy_audit {
namespace {

DetectionConfig MeasureEverything() {
  DetectionConfig cfg;
  cfg.epsilon = 0;
  cfg.delta = 0;
  return cfg;
}

// Rows at a fixed depth-6 tree.
void BM_DetectRows(benchmark::State& state) {
  const Program p = workloads::BalancedTree(6);
  const Population pop = workloads::Rows(state.range(0), 6);
  const DetectionConfig cfg = MeasureEverything();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ProxyDetect(p, pop, cfg));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DetectRows)->RangeMultiplier(2)->Range(1 << 10, 1 << 13)
    ->Complexity(benchmark::oN)->Unit(benchmark::kMillisecond);

// Tree depth at 2000 rows.
void BM_DetectDepth(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  const Program p = workloads::BalancedTree(depth);
  const Population pop = workloads::Rows(2000, depth);
  const DetectionConfig cfg = MeasureEverything();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ProxyDetect(p, pop, cfg));
  }
  state.counters["nodes"] = static_cast<double>(p.size());
}
BENCHMARK(BM_DetectDepth)->DenseRange(2, 8, 2)->Unit(benchmark::kMillisecond);

void BM_DetectSampled(benchmark::State& state) {
  const Program p = workloads::BalancedTree(6);
  const Population pop = workloads::Rows(state.range(0), 6);
  DetectionConfig cfg = MeasureEverything();
  cfg.estimator = Estimator::kSampled;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ProxyDetect(p, pop, cfg));
  }
}
BENCHMARK(BM_DetectSampled)->Arg(1 << 10)->Arg(1 << 13)
    ->Unit(benchmark::kMillisecond);

// The naive detector, for the speedup of caches and reachability.
void BM_ReferenceDetect(benchmark::State& state) {
  const Program p = workloads::BalancedTree(4);
  const Population pop = workloads::Rows(state.range(0), 4);
  const DetectionConfig cfg = MeasureEverything();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ReferenceDetect(p, pop, cfg));
  }
}
BENCHMARK(BM_ReferenceDetect)->Arg(1 << 6)->Arg(1 << 7)
    ->Unit(benchmark::kMillisecond);

void BM_Association(benchmark::State& state) {
  const Population pop = workloads::Rows(state.range(0), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        Association(pop.values("x1"), pop.protected_values()));
  }
}
BENCHMARK(BM_Association)->Arg(1 << 10)->Arg(1 << 16);

void BM_RepairLoop(benchmark::State& state) {
  const Program p = workloads::BalancedTree(5);
  const Population pop = workloads::Rows(2000, 5);
  DetectionConfig cfg;
  cfg.epsilon = 0.2;
  cfg.delta = 0.05;
  const Utility v = Utility::Agreement(p, pop, false).value();
  for (auto _ : state) {
    benchmark::DoNotOptimize(RepairLoop(
        p, pop, cfg, [](const Witness&) { return Verdict::kInappropriate; }, v,
        UndecidedPolicy::kSuspend));
  }
}
BENCHMARK(BM_RepairLoop)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace proxy_audit

BENCHMARK_MAIN();
