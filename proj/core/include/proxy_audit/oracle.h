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

#ifndef PROXY_AUDIT_ORACLE_H_
#define PROXY_AUDIT_ORACLE_H_

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/statusor.h"
#include "proxy_audit/detection.h"

namespace proxy_audit {

enum class Verdict { kAppropriate, kInappropriate, kUndecided };

std::string_view VerdictName(Verdict v);
absl::StatusOr<Verdict> ParseVerdict(std::string_view text);

struct Judgment {
  std::string fingerprint;
  Verdict verdict = Verdict::kUndecided;
  std::string note;
  std::string timestamp;  // RFC 3339, UTC
  std::string author;
};

nlohmann::json ToJson(const Judgment& j);
absl::StatusOr<Judgment> JudgmentFromJson(const nlohmann::json& doc);

// A rule matches a witness whose p1 mentions at least one of `mentions`
// (any witness when empty) and whose measures reach both minima.
struct PolicyRule {
  std::vector<std::string> mentions;
  double min_association = 0;
  double min_influence = 0;
  Verdict verdict = Verdict::kUndecided;

  bool Matches(const Witness& w) const;
};

struct Policy {
  Verdict default_verdict = Verdict::kUndecided;
  std::vector<PolicyRule> rules;

  // First matching rule, else the default.
  Verdict Evaluate(const Witness& w) const;

  static absl::StatusOr<Policy> FromJson(const nlohmann::json& doc);
  static absl::StatusOr<Policy> Load(const std::string& path);
};

// Recorded judgments keyed by fingerprint. History is append-only and the
// latest record per fingerprint is active. With a log path every record is
// appended and flushed to the log before it becomes visible. All members
// are safe to call concurrently; writers are serialized.
class JudgmentStore {
 public:
  JudgmentStore() = default;
  // Replays an existing log; a missing file is an empty store.
  static absl::StatusOr<std::unique_ptr<JudgmentStore>> Open(
      std::string log_path);

  // Fingerprints that may be judged. Until the first call any fingerprint
  // is admitted.
  void SetKnownFingerprints(std::set<std::string> known);
  void AddKnownFingerprints(const std::set<std::string>& known);

  // NotFound for an unknown fingerprint. Fills in a missing timestamp.
  absl::Status Record(Judgment j);

  std::optional<Judgment> Active(std::string_view fingerprint) const;
  std::vector<Judgment> History() const;

 private:
  mutable std::mutex mu_;
  std::string log_path_;
  std::optional<std::set<std::string>> known_;
  std::vector<Judgment> history_;
  std::map<std::string, size_t, std::less<>> active_;
};

// The recorded judgment, else the policy verdict, else undecided.
Verdict Judge(const Witness& w, const JudgmentStore* store,
              const Policy* policy);

std::string NowRfc3339();

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_ORACLE_H_
