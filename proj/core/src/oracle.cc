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

#include "proxy_audit/oracle.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "absl/status/status.h"
#include "fileio.h"
#include "proxy_audit/model.h"
#include "str.h"

namespace proxy_audit {

using json = nlohmann::json;

std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kAppropriate:
      return "appropriate";
    case Verdict::kInappropriate:
      return "inappropriate";
    case Verdict::kUndecided:
      return "undecided";
  }
  return "undecided";
}

absl::StatusOr<Verdict> ParseVerdict(std::string_view text) {
  if (text == "appropriate" || text == "approve") return Verdict::kAppropriate;
  if (text == "inappropriate" || text == "deny") return Verdict::kInappropriate;
  if (text == "undecided") return Verdict::kUndecided;
  return absl::InvalidArgumentError(StrCat("unknown verdict '", text, "'"));
}

std::string NowRfc3339() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm;
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json ToJson(const Judgment& j) {
  return {{"fingerprint", j.fingerprint},
          {"verdict", std::string(VerdictName(j.verdict))},
          {"note", j.note},
          {"timestamp", j.timestamp},
          {"author", j.author}};
}

absl::StatusOr<Judgment> JudgmentFromJson(const json& doc) {
  if (!doc.is_object() || !doc.contains("fingerprint") ||
      !doc["fingerprint"].is_string() || !doc.contains("verdict") ||
      !doc["verdict"].is_string()) {
    return absl::InvalidArgumentError(
        "judgment needs string 'fingerprint' and 'verdict'");
  }
  Judgment j;
  j.fingerprint = doc["fingerprint"].get<std::string>();
  absl::StatusOr<Verdict> v = ParseVerdict(doc["verdict"].get<std::string>());
  if (!v.ok()) return v.status();
  j.verdict = *v;
  auto str = [&](const char* key) -> std::string {
    auto it = doc.find(key);
    return it != doc.end() && it->is_string() ? it->get<std::string>() : "";
  };
  j.note = str("note");
  j.timestamp = str("timestamp");
  j.author = str("author");
  return j;
}

bool PolicyRule::Matches(const Witness& w) const {
  if (w.association < min_association || w.influence < min_influence) {
    return false;
  }
  if (mentions.empty()) return true;
  return std::any_of(mentions.begin(), mentions.end(), [&](const auto& m) {
    return std::find(w.mentions.begin(), w.mentions.end(), m) !=
           w.mentions.end();
  });
}

Verdict Policy::Evaluate(const Witness& w) const {
  for (const PolicyRule& r : rules) {
    if (r.Matches(w)) return r.verdict;
  }
  return default_verdict;
}

absl::StatusOr<Policy> Policy::FromJson(const json& doc) {
  if (!doc.is_object()) return absl::InvalidArgumentError("policy must be an object");
  Policy p;
  if (doc.contains("default")) {
    if (!doc["default"].is_string()) {
      return absl::InvalidArgumentError("policy 'default' must be a string");
    }
    absl::StatusOr<Verdict> v = ParseVerdict(doc["default"].get<std::string>());
    if (!v.ok()) return v.status();
    p.default_verdict = *v;
  }
  if (!doc.contains("rules")) return p;
  if (!doc["rules"].is_array()) {
    return absl::InvalidArgumentError("policy 'rules' must be an array");
  }
  for (const json& r : doc["rules"]) {
    if (!r.is_object() || !r.contains("verdict") || !r["verdict"].is_string()) {
      return absl::InvalidArgumentError("policy rule needs a 'verdict'");
    }
    PolicyRule rule;
    absl::StatusOr<Verdict> v = ParseVerdict(r["verdict"].get<std::string>());
    if (!v.ok()) return v.status();
    rule.verdict = *v;
    if (r.contains("mentions")) {
      if (!r["mentions"].is_array()) {
        return absl::InvalidArgumentError("rule 'mentions' must be an array");
      }
      for (const json& m : r["mentions"]) {
        if (!m.is_string()) {
          return absl::InvalidArgumentError("rule 'mentions' holds names");
        }
        rule.mentions.push_back(m.get<std::string>());
      }
    }
    for (auto [key, field] :
         {std::pair{"min_association", &rule.min_association},
          std::pair{"min_influence", &rule.min_influence}}) {
      if (!r.contains(key)) continue;
      if (!r[key].is_number()) {
        return absl::InvalidArgumentError(StrCat("rule '", key, "' must be a number"));
      }
      *field = r[key].get<double>();
    }
    p.rules.push_back(std::move(rule));
  }
  return p;
}

absl::StatusOr<Policy> Policy::Load(const std::string& path) {
  absl::StatusOr<json> doc = ReadJsonFile(path);
  if (!doc.ok()) return doc.status();
  absl::StatusOr<Policy> p = FromJson(*doc);
  if (!p.ok()) {
    return absl::Status(p.status().code(),
                        StrCat(path, ": ", std::string(p.status().message())));
  }
  return p;
}

absl::StatusOr<std::unique_ptr<JudgmentStore>> JudgmentStore::Open(
    std::string log_path) {
  auto store = std::make_unique<JudgmentStore>();
  store->log_path_ = std::move(log_path);
  std::ifstream in(store->log_path_);
  std::string line;
  size_t lineno = 0;
  std::uintmax_t good = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const bool complete = !in.eof();
    json doc = line.empty() ? json() : json::parse(line, nullptr, false);
    if (line.empty() || doc.is_discarded()) {
      if (line.empty() && complete) {
        good += 1;
        continue;
      }
      // A torn final write from a crash is cut off so later appends start
      // on a fresh line; anything else is corrupt.
      if (in.peek() == EOF) {
        in.close();
        std::error_code ec;
        std::filesystem::resize_file(store->log_path_, good, ec);
        if (ec) {
          return absl::InternalError(
              StrCat("cannot truncate '", store->log_path_, "'"));
        }
        break;
      }
      return absl::DataLossError(
          StrCat(store->log_path_, ":", lineno, ": unreadable judgment"));
    }
    good += line.size() + (complete ? 1 : 0);
    absl::StatusOr<Judgment> j = JudgmentFromJson(doc);
    if (!j.ok()) return j.status();
    store->active_[j->fingerprint] = store->history_.size();
    store->history_.push_back(*std::move(j));
  }
  return store;
}

void JudgmentStore::SetKnownFingerprints(std::set<std::string> known) {
  std::lock_guard<std::mutex> lock(mu_);
  known_ = std::move(known);
}

void JudgmentStore::AddKnownFingerprints(const std::set<std::string>& known) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!known_) known_.emplace();
  known_->insert(known.begin(), known.end());
}

absl::Status JudgmentStore::Record(Judgment j) {
  std::lock_guard<std::mutex> lock(mu_);
  if (known_ && !known_->count(j.fingerprint)) {
    return absl::NotFoundError(
        StrCat("unknown fingerprint '", j.fingerprint, "'"));
  }
  if (j.timestamp.empty()) j.timestamp = NowRfc3339();
  if (!log_path_.empty()) {
    absl::Status written = AppendLine(log_path_, ToJson(j).dump());
    if (!written.ok()) return written;
  }
  active_[j.fingerprint] = history_.size();
  history_.push_back(std::move(j));
  return absl::OkStatus();
}

std::optional<Judgment> JudgmentStore::Active(
    std::string_view fingerprint) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = active_.find(fingerprint);
  if (it == active_.end()) return std::nullopt;
  return history_[it->second];
}

std::vector<Judgment> JudgmentStore::History() const {
  std::lock_guard<std::mutex> lock(mu_);
  return history_;
}

Verdict Judge(const Witness& w, const JudgmentStore* store,
              const Policy* policy) {
  if (store != nullptr) {
    std::optional<Judgment> j = store->Active(w.fingerprint);
    if (j.has_value()) return j->verdict;
  }
  if (policy != nullptr) return policy->Evaluate(w);
  return Verdict::kUndecided;
}

}  // namespace proxy_audit
