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

#ifndef PROXY_AUDIT_VALIDITY_H_
#define PROXY_AUDIT_VALIDITY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/dataset.h"
#include "proxy_audit/detection.h"

namespace proxy_audit {

struct ValidityConfig {
  int folds = 5;              // n
  int accept_threshold = 5;   // t
  size_t bootstrap_samples = 1000;
  double alpha_sig = 0.05;
  uint64_t seed = 0;
};

absl::Status ValidateConfig(const ValidityConfig& cfg);

struct ValidatedWitness {
  // Measured on the full population at the positions where the proxy was
  // first validated.
  Witness witness;
  int appearances = 0;
};

// Detects on each analysis fold and re-measures every witness on the
// paired validation fold. A fingerprint counts once per fold when some
// witness with it passes (epsilon, delta) on the validation rows. Only
// fingerprints with at least `accept_threshold` appearances are returned,
// in witness order.
absl::StatusOr<std::vector<ValidatedWitness>> CrossValidatedDetect(
    const Program& p, const Population& pop, const DetectionConfig& det,
    const ValidityConfig& val);

struct BootstrapResult {
  double observed = 0;  // association of ⟦p1⟧ with Z
  double raw_p = 1;
  double adjusted_p = 1;
  size_t hypothesis_count = 1;
  bool accepted = false;
};

// Permutation test of the association of ⟦p1⟧ with Z against the
// independence null: raw_p is the fraction of `samples` random pairings
// whose association is at least the observed one.
absl::StatusOr<BootstrapResult> BootstrapPValue(const Program& p1,
                                                const Population& pop,
                                                size_t samples, uint64_t seed,
                                                const MeasureOptions& options = {});

// adjusted_p = min(1, raw_p · hypothesis_count); accepted when adjusted_p
// <= alpha_sig.
absl::StatusOr<std::vector<BootstrapResult>> BonferroniAdjust(
    std::span<const BootstrapResult> results, size_t hypothesis_count,
    double alpha_sig);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_VALIDITY_H_
