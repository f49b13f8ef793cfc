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

#ifndef PROXY_AUDIT_DATASET_H_
#define PROXY_AUDIT_DATASET_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "proxy_audit/evaluate.h"
#include "proxy_audit/expr.h"

namespace proxy_audit {

struct Column {
  std::string name;
  // Symbolic columns hold dense codes; symbols[code] is the original text,
  // with codes assigned in sorted symbol order.
  std::vector<std::string> symbols;
  std::vector<Value> values;

  bool symbolic() const { return !symbols.empty(); }
};

// A uniformly weighted finite population with a designated protected
// column Z and an optional label column.
class Population {
 public:
  static absl::StatusOr<Population> Create(std::vector<Column> columns,
                                           std::string protected_column,
                                           std::optional<std::string> label);

  size_t size() const { return rows_; }
  double weight() const { return 1.0 / static_cast<double>(rows_); }

  const std::vector<Column>& columns() const { return columns_; }
  // -1 when absent.
  int ColumnIndex(std::string_view name) const;
  bool HasColumn(std::string_view name) const { return ColumnIndex(name) >= 0; }
  const Column& column(std::string_view name) const;
  std::span<const Value> values(std::string_view name) const {
    return column(name).values;
  }

  const std::string& protected_column() const { return protected_; }
  std::span<const Value> protected_values() const { return values(protected_); }
  const std::optional<std::string>& label() const { return label_; }

  // Values of one row in column order.
  std::vector<Value> Row(size_t i) const;
  // Sorted distinct values of a column.
  std::vector<Value> Domain(std::string_view name) const;

  // The population restricted to `rows` (in the given order, repeats kept).
  Population Select(std::span<const RowIndex> rows) const;

  // Binds the parameters of `p` to columns. The protected column may only
  // be an input when `allow_protected` is set; boolean parameters need 0/1
  // columns.
  absl::StatusOr<ColumnEnv> Bind(const Program& p, bool allow_protected) const;
  // Row values in parameter order, for scalar evaluation.
  absl::StatusOr<std::vector<std::vector<Value>>> ParamRows(
      const Program& p, bool allow_protected) const;

 private:
  Population() = default;

  std::vector<Column> columns_;
  size_t rows_ = 0;
  std::string protected_;
  std::optional<std::string> label_;
};

// RFC 4180 CSV with a header row. Columns whose fields all parse as reals
// are numeric; others are symbolic. Empty fields are rejected.
absl::StatusOr<Population> ParseCsv(std::string_view text,
                                    const std::string& protected_column,
                                    std::optional<std::string> label);
absl::StatusOr<Population> LoadCsv(const std::string& path,
                                   const std::string& protected_column,
                                   std::optional<std::string> label);
std::string ToCsv(const Population& pop);

// ⟦p⟧ over the population, one value per row.
absl::StatusOr<std::vector<Value>> ProgramValues(const Program& p,
                                                 const Population& pop,
                                                 bool allow_protected);

struct Fold {
  std::vector<RowIndex> analysis;
  std::vector<RowIndex> validation;
};

// n-fold split: rows are shuffled with `seed` and dealt into n folds; pair
// i validates on fold i and analyses the rest.
absl::StatusOr<std::vector<Fold>> Partition(size_t rows, int folds,
                                            uint64_t seed);

// n rows drawn uniformly with replacement.
Population Subsample(const Population& pop, size_t n, uint64_t seed);

// Quantile binning for association: values with at most `bins` distinct
// levels are returned unchanged, others are replaced by their bin index.
std::vector<Value> BinForAssociation(std::span<const Value> values, int bins);
size_t DistinctCount(std::span<const Value> values);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_DATASET_H_
