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

#ifndef PROXY_AUDIT_TESTS_SUPPORT_FIXTURES_H_
#define PROXY_AUDIT_TESTS_SUPPORT_FIXTURES_H_

#include <string>
#include <utility>
#include <vector>

#include "gtest/gtest.h"
#include "proxy_audit/dataset.h"
#include "proxy_audit/model.h"
#include "proxy_audit/syntax.h"

namespace proxy_audit::testing {

inline std::string DataPath(const std::string& rel) {
  return std::string(PROXY_AUDIT_DATA_DIR) + "/" + rel;
}

inline Program ParseOrFail(const std::string& text) {
  absl::StatusOr<Program> p = ParseProgram(text);
  EXPECT_TRUE(p.ok()) << p.status();
  return p.ok() ? *std::move(p) : Program::CreateOrDie({}, Expr::Real(0));
}

inline Program ModelOrFail(const std::string& rel) {
  absl::StatusOr<Program> p = LoadModel(DataPath(rel));
  EXPECT_TRUE(p.ok()) << rel << ": " << p.status();
  return p.ok() ? *std::move(p) : Program::CreateOrDie({}, Expr::Real(0));
}

inline Population PopulationOrDie(const std::string& rel,
                                  const std::string& protected_column,
                                  std::optional<std::string> label = {}) {
  absl::StatusOr<Population> pop =
      LoadCsv(DataPath(rel), protected_column, std::move(label));
  if (!pop.ok()) {
    ADD_FAILURE() << rel << ": " << pop.status();
    std::abort();
  }
  return *std::move(pop);
}

inline Population Retailer() {
  return PopulationOrDie("retailer.csv", "pregnant");
}

// A population from row-major integer rows; the last name is Z.
inline Population FromRows(const std::vector<std::string>& names,
                           const std::vector<std::vector<double>>& rows,
                           const std::string& protected_column,
                           std::optional<std::string> label = {}) {
  std::vector<Column> columns(names.size());
  for (size_t c = 0; c < names.size(); ++c) {
    columns[c].name = names[c];
    columns[c].values.reserve(rows.size());
    for (const auto& row : rows) columns[c].values.push_back(row[c]);
  }
  absl::StatusOr<Population> pop =
      Population::Create(std::move(columns), protected_column, std::move(label));
  if (!pop.ok()) {
    ADD_FAILURE() << pop.status();
    std::abort();
  }
  return *std::move(pop);
}

}  // namespace proxy_audit::testing

#endif  // PROXY_AUDIT_TESTS_SUPPORT_FIXTURES_H_
