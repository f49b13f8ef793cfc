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

#include "proxy_audit/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "absl/status/status.h"
#include "check.h"
#include "proxy_audit/random.h"
#include "str.h"

namespace proxy_audit {

absl::StatusOr<Population> Population::Create(
    std::vector<Column> columns, std::string protected_column,
    std::optional<std::string> label) {
  if (columns.empty()) return absl::InvalidArgumentError("no columns");
  Population pop;
  pop.rows_ = columns.front().values.size();
  if (pop.rows_ == 0) return absl::InvalidArgumentError("population is empty");
  std::set<std::string> names;
  for (const Column& c : columns) {
    if (!names.insert(c.name).second) {
      return absl::InvalidArgumentError(
          StrCat("duplicate column '", c.name, "'"));
    }
    if (c.values.size() != pop.rows_) {
      return absl::InvalidArgumentError(
          StrCat("column '", c.name, "' has ", c.values.size(),
                 " rows, expected ", pop.rows_));
    }
  }
  pop.columns_ = std::move(columns);
  if (pop.ColumnIndex(protected_column) < 0) {
    return absl::NotFoundError(
        StrCat("missing protected column '", protected_column, "'"));
  }
  if (label.has_value() && pop.ColumnIndex(*label) < 0) {
    return absl::NotFoundError(StrCat("missing label column '", *label, "'"));
  }
  pop.protected_ = std::move(protected_column);
  pop.label_ = std::move(label);
  return pop;
}

int Population::ColumnIndex(std::string_view name) const {
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const Column& Population::column(std::string_view name) const {
  const int i = ColumnIndex(name);
  PA_CHECK(i >= 0, "unknown column");
  return columns_[i];
}

std::vector<Value> Population::Row(size_t i) const {
  std::vector<Value> row;
  row.reserve(columns_.size());
  for (const Column& c : columns_) row.push_back(c.values[i]);
  return row;
}

std::vector<Value> Population::Domain(std::string_view name) const {
  std::vector<Value> d(values(name).begin(), values(name).end());
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

Population Population::Select(std::span<const RowIndex> rows) const {
  Population out;
  out.rows_ = rows.size();
  out.protected_ = protected_;
  out.label_ = label_;
  out.columns_.reserve(columns_.size());
  for (const Column& c : columns_) {
    Column sel{c.name, c.symbols, {}};
    sel.values.reserve(rows.size());
    for (RowIndex r : rows) sel.values.push_back(c.values[r]);
    out.columns_.push_back(std::move(sel));
  }
  return out;
}

absl::StatusOr<ColumnEnv> Population::Bind(const Program& p,
                                           bool allow_protected) const {
  ColumnEnv env;
  for (const Param& q : p.params()) {
    const int i = ColumnIndex(q.name);
    if (i < 0) {
      return absl::NotFoundError(
          StrCat("model input '", q.name, "' is not a dataset column"));
    }
    if (q.name == protected_ && !allow_protected) {
      return absl::InvalidArgumentError(
          StrCat("model input '", q.name,
                 "' is the protected column; enable explicit-use auditing"));
    }
    if (q.type == Type::kBool) {
      for (Value v : columns_[i].values) {
        if (v != 0 && v != 1) {
          return absl::InvalidArgumentError(
              StrCat("boolean input '", q.name, "' has a non-0/1 value"));
        }
      }
    }
    env.BindColumn(q.name, columns_[i].values);
  }
  return env;
}

absl::StatusOr<std::vector<std::vector<Value>>> Population::ParamRows(
    const Program& p, bool allow_protected) const {
  absl::StatusOr<ColumnEnv> env = Bind(p, allow_protected);
  if (!env.ok()) return env.status();
  std::vector<std::vector<Value>> rows(rows_);
  for (const Param& q : p.params()) {
    std::span<const Value> col = values(q.name);
    for (size_t r = 0; r < rows_; ++r) rows[r].push_back(col[r]);
  }
  return rows;
}

namespace {

// Splits RFC 4180 text into records of fields. Reports the 1-based line of
// malformed quoting.
absl::StatusOr<std::vector<std::vector<std::string>>> SplitCsv(
    std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool was_quoted = false;
  size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line yields a single empty field; skip it.
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          return absl::InvalidArgumentError(
              StrCat("line ", line, ": quote inside an unquoted field"));
        }
        in_quotes = true;
        field_started = true;
        was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (was_quoted) {
          return absl::InvalidArgumentError(
              StrCat("line ", line, ": text after a closing quote"));
        }
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    return absl::InvalidArgumentError("unterminated quoted field");
  }
  if (field_started || !record.empty()) end_record();
  return records;
}

std::optional<double> ParseReal(const std::string& s) {
  double v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  if (b < e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || b == e || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

absl::StatusOr<Population> ParseCsv(std::string_view text,
                                    const std::string& protected_column,
                                    std::optional<std::string> label) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
    text.remove_prefix(3);
  }
  absl::StatusOr<std::vector<std::vector<std::string>>> records =
      SplitCsv(text);
  if (!records.ok()) return records.status();
  if (records->empty()) return absl::InvalidArgumentError("missing header row");
  const std::vector<std::string>& header = records->front();
  const size_t width = header.size();
  for (size_t r = 1; r < records->size(); ++r) {
    if ((*records)[r].size() != width) {
      return absl::InvalidArgumentError(
          StrCat("ragged row ", r, ": ", (*records)[r].size(),
                 " fields, header has ", width));
    }
  }
  std::vector<Column> columns(width);
  for (size_t c = 0; c < width; ++c) {
    columns[c].name = header[c];
    bool numeric = true;
    std::vector<double> parsed;
    parsed.reserve(records->size() - 1);
    for (size_t r = 1; r < records->size(); ++r) {
      const std::string& f = (*records)[r][c];
      if (f.empty()) {
        return absl::InvalidArgumentError(
            StrCat("missing value in column '", header[c], "' at row ", r));
      }
      if (numeric) {
        std::optional<double> v = ParseReal(f);
        if (v.has_value()) {
          parsed.push_back(*v);
        } else {
          numeric = false;
        }
      }
    }
    if (numeric) {
      columns[c].values = std::move(parsed);
      continue;
    }
    std::map<std::string, int> codes;
    for (size_t r = 1; r < records->size(); ++r) codes[(*records)[r][c]] = 0;
    int next = 0;
    for (auto& [sym, code] : codes) {
      code = next++;
      columns[c].symbols.push_back(sym);
    }
    columns[c].values.reserve(records->size() - 1);
    for (size_t r = 1; r < records->size(); ++r) {
      columns[c].values.push_back(codes[(*records)[r][c]]);
    }
  }
  return Population::Create(std::move(columns), protected_column,
                            std::move(label));
}

absl::StatusOr<Population> LoadCsv(const std::string& path,
                                   const std::string& protected_column,
                                   std::optional<std::string> label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(StrCat("cannot open '", path, "'"));
  std::stringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<Population> pop =
      ParseCsv(buf.str(), protected_column, std::move(label));
  if (!pop.ok()) {
    return absl::Status(pop.status().code(),
                        StrCat(path, ": ", std::string(pop.status().message())));
  }
  return pop;
}

namespace {

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string ToCsv(const Population& pop) {
  std::string out;
  const auto& cols = pop.columns();
  for (size_t c = 0; c < cols.size(); ++c) {
    if (c > 0) out.push_back(',');
    out += CsvField(cols[c].name);
  }
  out.push_back('\n');
  for (size_t r = 0; r < pop.size(); ++r) {
    for (size_t c = 0; c < cols.size(); ++c) {
      if (c > 0) out.push_back(',');
      const Value v = cols[c].values[r];
      if (cols[c].symbolic()) {
        out += CsvField(cols[c].symbols[static_cast<size_t>(v)]);
      } else {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        out.append(buf, ptr);
      }
    }
    out.push_back('\n');
  }
  return out;
}

absl::StatusOr<std::vector<Value>> ProgramValues(const Program& p,
                                                 const Population& pop,
                                                 bool allow_protected) {
  absl::StatusOr<ColumnEnv> env = pop.Bind(p, allow_protected);
  if (!env.ok()) return env.status();
  return EvaluateBatch(p.expr(), *env, AllRows(pop.size()));
}

absl::StatusOr<std::vector<Fold>> Partition(size_t rows, int folds,
                                            uint64_t seed) {
  if (folds < 2) return absl::InvalidArgumentError("need at least 2 folds");
  if (rows < static_cast<size_t>(folds)) {
    return absl::FailedPreconditionError(
        StrCat("too few rows: ", rows, " rows for ", folds, " folds"));
  }
  std::vector<RowIndex> order = AllRows(rows);
  Rng rng = Substream(seed, 0x70617274);
  Shuffle(std::span<RowIndex>(order), rng);
  std::vector<Fold> out(folds);
  for (size_t i = 0; i < rows; ++i) {
    const size_t f = i % folds;
    for (int k = 0; k < folds; ++k) {
      (static_cast<size_t>(k) == f ? out[k].validation : out[k].analysis)
          .push_back(order[i]);
    }
  }
  for (Fold& f : out) {
    std::sort(f.analysis.begin(), f.analysis.end());
    std::sort(f.validation.begin(), f.validation.end());
  }
  return out;
}

Population Subsample(const Population& pop, size_t n, uint64_t seed) {
  Rng rng = Substream(seed, 0x73616d70);
  std::vector<RowIndex> rows(n);
  for (RowIndex& r : rows) r = static_cast<RowIndex>(UniformIndex(rng, pop.size()));
  return pop.Select(rows);
}

size_t DistinctCount(std::span<const Value> values) {
  std::vector<Value> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return std::unique(v.begin(), v.end()) - v.begin();
}

std::vector<Value> BinForAssociation(std::span<const Value> values, int bins) {
  std::vector<Value> out(values.begin(), values.end());
  if (bins < 1 || DistinctCount(values) <= static_cast<size_t>(bins)) {
    return out;
  }
  std::vector<Value> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Value> cuts;
  for (int k = 1; k < bins; ++k) {
    cuts.push_back(sorted[k * sorted.size() / bins]);
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (Value& v : out) {
    v = static_cast<Value>(std::upper_bound(cuts.begin(), cuts.end(), v) -
                           cuts.begin());
  }
  return out;
}

}  // namespace proxy_audit
