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

#ifndef PROXY_AUDIT_MEASURES_H_
#define PROXY_AUDIT_MEASURES_H_

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/dataset.h"
#include "proxy_audit/decomposition.h"
#include "proxy_audit/evaluate.h"

namespace proxy_audit {

// Values relabelled 0..k-1 in sorted order of the original values.
struct Codes {
  std::vector<uint32_t> codes;
  uint32_t levels = 0;
};
Codes Encode(std::span<const Value> values);

struct ContingencyTable {
  uint32_t x_levels = 0;
  uint32_t z_levels = 0;
  // counts[x * z_levels + z]
  std::vector<uint64_t> counts;
  uint64_t total = 0;

  uint64_t at(uint32_t x, uint32_t z) const { return counts[x * z_levels + z]; }
};
ContingencyTable Tabulate(const Codes& x, const Codes& z);

struct Entropies {
  double x = 0;
  double z = 0;
  double joint = 0;
};
// Base-2 entropies of the marginals and the joint.
Entropies EntropiesOf(const ContingencyTable& t);

// Normalized mutual information I(X;Z)/H(X,Z), which equals
// 1 - (H(X|Z) + H(Z|X))/H(X,Z). Zero when H(X,Z) = 0.
double Association(const ContingencyTable& t);
double Association(std::span<const Value> x, std::span<const Value> z);

struct EstimatorConfig {
  double alpha = 0.05;  // error bound
  double beta = 0.05;   // failure probability
  uint64_t seed = 0;
};
// ⌈ln(2/β) / (2α²)⌉.
size_t HoeffdingSampleSize(double alpha, double beta);

struct MeasureOptions {
  // Quantile bins for association targets with many distinct values.
  int bins = 10;
  // Whether the protected column may be a model input.
  bool allow_protected = false;
};

// Everything shared by the decompositions of one program over one
// population: column bindings, the program's outputs on every row, and the
// rows that reach each node. The population must outlive the context.
class ProgramContext {
 public:
  static absl::StatusOr<std::unique_ptr<ProgramContext>> Create(
      const Program& p, const Population& pop, const MeasureOptions& options);

  const Program& program() const { return program_; }
  const Population& population() const { return pop_; }
  const ColumnEnv& env() const { return env_; }
  const MeasureOptions& options() const { return options_; }
  const std::vector<Value>& outputs() const { return outputs_; }
  const Reachability& reach() const { return reach_; }
  const Codes& z_codes() const { return z_codes_; }

  // ⟦e⟧ on every row, memoized by canonical text.
  absl::StatusOr<const std::vector<Value>*> SubtermValues(const Expr& e);

 private:
  ProgramContext(const Program& p, const Population& pop,
                 const MeasureOptions& options)
      : program_(p), pop_(pop), options_(options) {}

  Program program_;
  const Population& pop_;
  MeasureOptions options_;
  ColumnEnv env_;
  std::vector<Value> outputs_;
  Reachability reach_;
  Codes z_codes_;
  std::map<std::string, std::vector<Value>> memo_;
};

// Pre-computed quantities of one decomposition.
struct MeasureCache {
  ContingencyTable table;  // binned ⟦p1⟧ against Z
  double association = 0;
  double reach_prob = 0;
  // Rows on which evaluation of the parent reaches some position of p1.
  std::vector<RowIndex> reached_rows;
  // Distinct values of ⟦p1⟧ over the population with their probabilities.
  std::vector<std::pair<Value, double>> range;
  const std::vector<Value>* p1_values = nullptr;
};

absl::StatusOr<MeasureCache> BuildCache(const Decomposition& d,
                                        ProgramContext& ctx);

// ι(p1, p2) = Pr[reached] · E_{X|reached} E_{Y∼⟦p1⟧D} 1[⟦p⟧X ≠ ⟦p2⟧(X,Y)],
// exact over reached rows × range.
absl::StatusOr<double> InfluenceExact(const Decomposition& d,
                                      const ProgramContext& ctx,
                                      const MeasureCache& cache);

// Mean of n = HoeffdingSampleSize(α, β) indicators over independently drawn
// row pairs (X, X'), comparing ⟦p⟧X with ⟦p2⟧(X, ⟦p1⟧X').
absl::StatusOr<double> InfluenceSampled(const Decomposition& d,
                                        const ProgramContext& ctx,
                                        const MeasureCache& cache,
                                        const EstimatorConfig& config);

// The unfactorized definition: scalar evaluation over all |D|² row pairs.
absl::StatusOr<double> InfluenceDirect(const Decomposition& d,
                                       const Population& pop,
                                       bool allow_protected);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_MEASURES_H_
