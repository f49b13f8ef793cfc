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

#ifndef PROXY_AUDIT_DETECTION_H_
#define PROXY_AUDIT_DETECTION_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/dataset.h"
#include "proxy_audit/decomposition.h"
#include "proxy_audit/measures.h"

namespace proxy_audit {

enum class Estimator { kExact, kSampled };

struct DetectionConfig {
  double epsilon = 0.5;
  double delta = 0.1;
  EnumerationLimits limits;
  Estimator estimator = Estimator::kExact;
  EstimatorConfig sampling;
  MeasureOptions measure;
  // Measure influence of every decomposition, not only of those whose
  // association reaches epsilon (for subexpression reports).
  bool measure_all_influences = false;
};

absl::Status ValidateConfig(const DetectionConfig& cfg);

struct Witness {
  std::string fingerprint;
  std::string p1_text;
  std::string p2_text;
  std::vector<Position> positions;
  double association = 0;
  double influence = 0;
  double reach_prob = 0;
  size_t subterm_size = 0;
  // Variables p1 mentions.
  std::vector<std::string> mentions;
  Decomposition decomposition;
};

// One measured decomposition. `parent` indexes the record of the nearest
// enclosing decomposition (the singleton of the first position for
// multi-occurrence sets), forming a forest.
struct SubexprRecord {
  std::vector<Position> positions;
  std::string fingerprint;
  std::string p1_text;
  double association = 0;
  std::optional<double> influence;
  double reach_prob = 0;
  size_t subterm_size = 0;
  std::optional<size_t> parent;
};

struct DetectionStats {
  size_t decomposition_count = 0;  // c
  size_t max_range = 0;            // k
  size_t dataset_size = 0;         // |D|
  size_t program_size = 0;         // |p|
  size_t influence_evaluations = 0;
  // Smallest share of reaching rows routed to the less-used branch of any
  // reached ite (1/2 for perfectly balanced splits).
  double min_branch_balance = 0.5;
  double wall_time_seconds = 0;
  bool incomplete = false;
};

struct DetectionResult {
  std::vector<Witness> witnesses;
  std::vector<SubexprRecord> subexpressions;
  DetectionStats stats;
};

// Decompositions with association >= epsilon and influence >= delta, in
// descending (association, influence) order, then by fingerprint and
// position. Influence is measured only when the association passes.
absl::StatusOr<DetectionResult> ProxyDetect(const Program& p,
                                            const Population& pop,
                                            const DetectionConfig& cfg);

// The same witness set computed naively: scalar evaluation, no caches and
// no reachability, |D|² influence.
absl::StatusOr<std::vector<Witness>> ReferenceDetect(const Program& p,
                                                     const Population& pop,
                                                     const DetectionConfig& cfg);

// A witness for `d` with the given measures.
Witness MakeWitness(const Decomposition& d, double association,
                    double influence, double reach_prob);

// Witness order used by both detectors.
bool WitnessBefore(const Witness& a, const Witness& b);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_DETECTION_H_
