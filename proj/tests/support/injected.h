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

#ifndef PROXY_AUDIT_TESTS_SUPPORT_INJECTED_H_
#define PROXY_AUDIT_TESTS_SUPPORT_INJECTED_H_

#include <cstdint>
#include <span>
#include <vector>

#include "proxy_audit/dataset.h"
#include "proxy_audit/detection.h"
#include "proxy_audit/repair.h"

namespace proxy_audit::testing {

// A complete depth-5 grade tree over g1..g5 with a second tree, which
// computes Z from h1 and h2 exactly, grafted in place of the subtree at `graft`.
struct InjectedCase {
  Population pop;
  Program original;
  Program grafted;
  Position graft;
  double injected_influence = 0;
};

// 500 rows of uniform levels; Z = [h1 + h2 >= 3]. The graft sits at depth
// `graft_depth` (1..5) on a random root path.
InjectedCase MakeInjectedCase(uint64_t seed, int graft_depth);

struct InjectedRepair {
  RepairOutcome outcome;
  double agreement = 0;  // repaired vs grafted predictions
  bool denied_left = false;
};

// Repairs at (0.01, 0.01) with an oracle that denies every witness inside
// the graft and approves the rest; v is agreement with the grafted model.
InjectedRepair RepairInjected(const InjectedCase& c);

// Rank correlation with average ranks for ties.
double Spearman(std::span<const double> x, std::span<const double> y);

}  // namespace proxy_audit::testing

#endif  // PROXY_AUDIT_TESTS_SUPPORT_INJECTED_H_
