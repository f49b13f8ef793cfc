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

#ifndef PROXY_AUDIT_SESSION_H_
#define PROXY_AUDIT_SESSION_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/statusor.h"
#include "proxy_audit/dataset.h"
#include "proxy_audit/detection.h"
#include "proxy_audit/oracle.h"
#include "proxy_audit/repair.h"

namespace proxy_audit {

struct SessionSpec {
  std::string model_path;
  std::string dataset_path;
  std::string protected_column;
  std::optional<std::string> label;
  double epsilon = 0.5;
  double delta = 0.1;
  int bins = 10;
  uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static absl::StatusOr<SessionSpec> FromJson(const nlohmann::json& doc);
  DetectionConfig Detection() const;
};

// A directory under the session root holding
//
//   manifest.json          the spec and session id
//   model.json             copy of the model document
//   judgments.ndjson       append-only judgment log
//   edits.ndjson           append-only repair edit log
//   program.txt            current program
//   witnesses.json         snapshot of the current detection
//   subexpressions.csv     per-subexpression measures
//   subexpressions.json
//   stats.json
//
// The current program is the original with the edit log replayed. All
// members serialize on one mutex.
class Session {
 public:
  // Allocates the next id ("session-0001", ...) and runs detection.
  static absl::StatusOr<std::unique_ptr<Session>> Create(
      const std::string& root, const SessionSpec& spec);
  // NotFound for an unknown id.
  static absl::StatusOr<std::unique_ptr<Session>> Open(const std::string& root,
                                                       const std::string& id);

  const std::string& id() const { return id_; }
  const std::string& dir() const { return dir_; }
  const SessionSpec& spec() const { return spec_; }

  Program original() const;
  Program current() const;
  std::vector<Edit> edits() const;
  std::vector<Witness> witnesses() const;
  std::vector<SubexprRecord> subexpressions() const;
  DetectionStats stats() const;

  Verdict VerdictFor(const Witness& w) const;
  // Witnesses with their verdicts, as documents.
  nlohmann::json WitnessesJson() const;

  // NotFound for a fingerprint no detection of this session produced.
  absl::Status RecordJudgment(Judgment j);
  std::vector<Judgment> Judgments() const;

  // Runs the repair loop with recorded judgments (then `policy`) as the
  // oracle. Edits are logged before the new program is adopted; a
  // suspended outcome keeps the edits made so far.
  absl::StatusOr<RepairOutcome> Repair(UndecidedPolicy undecided,
                                       const Policy* policy = nullptr);

 private:
  Session(std::string id, std::string dir, SessionSpec spec, Program original,
          Population pop);

  // The spec's thresholds; the protected column is an input when the model
  // names it.
  DetectionConfig Config() const;
  absl::Status DetectLocked();
  absl::Status WriteSnapshotsLocked() const;

  mutable std::mutex mu_;
  std::string id_;
  std::string dir_;
  SessionSpec spec_;
  Program original_;
  Program current_;
  Population pop_;
  bool explicit_use_ = false;
  std::vector<Edit> edits_;
  DetectionResult detection_;
  std::unique_ptr<JudgmentStore> store_;
};

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_SESSION_H_
