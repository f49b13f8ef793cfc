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

#include "proxy_audit/session.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "absl/status/status.h"
#include "fileio.h"
#include "proxy_audit/model.h"
#include "proxy_audit/report.h"
#include "proxy_audit/syntax.h"
#include "str.h"

namespace proxy_audit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kManifest[] = "manifest.json";
constexpr char kModel[] = "model.json";
constexpr char kJudgments[] = "judgments.ndjson";
constexpr char kEdits[] = "edits.ndjson";

std::string Join(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

bool ValidId(const std::string& id) {
  if (id.size() < 9 || id.rfind("session-", 0) != 0) return false;
  return std::all_of(id.begin() + 8, id.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::set<std::string> FingerprintsOf(const std::vector<Witness>& ws) {
  std::set<std::string> out;
  for (const Witness& w : ws) out.insert(w.fingerprint);
  return out;
}

absl::StatusOr<Population> LoadPopulation(const SessionSpec& spec) {
  return LoadCsv(spec.dataset_path, spec.protected_column, spec.label);
}

}  // namespace

json SessionSpec::ToJson() const {
  return {{"model_path", model_path},
          {"dataset_path", dataset_path},
          {"protected", protected_column},
          {"label", label ? json(*label) : json()},
          {"epsilon", epsilon},
          {"delta", delta},
          {"bins", bins},
          {"seed", seed}};
}

absl::StatusOr<SessionSpec> SessionSpec::FromJson(const json& doc) {
  if (!doc.is_object()) return absl::InvalidArgumentError("expected an object");
  SessionSpec s;
  auto str = [&](const char* key, std::string& out) -> absl::Status {
    if (!doc.contains(key) || !doc[key].is_string()) {
      return absl::InvalidArgumentError(StrCat("'", key, "' must be a string"));
    }
    out = doc[key].get<std::string>();
    return absl::OkStatus();
  };
  for (auto [key, out] : {std::pair{"model_path", &s.model_path},
                          std::pair{"dataset_path", &s.dataset_path},
                          std::pair{"protected", &s.protected_column}}) {
    absl::Status st = str(key, *out);
    if (!st.ok()) return st;
  }
  if (doc.contains("label") && !doc["label"].is_null()) {
    if (!doc["label"].is_string()) {
      return absl::InvalidArgumentError("'label' must be a string");
    }
    s.label = doc["label"].get<std::string>();
  }
  for (auto [key, out] : {std::pair{"epsilon", &s.epsilon},
                          std::pair{"delta", &s.delta}}) {
    if (!doc.contains(key)) continue;
    if (!doc[key].is_number()) {
      return absl::InvalidArgumentError(StrCat("'", key, "' must be a number"));
    }
    *out = doc[key].get<double>();
  }
  if (doc.contains("bins")) {
    if (!doc["bins"].is_number_integer() || doc["bins"].get<int>() < 2) {
      return absl::InvalidArgumentError("'bins' must be an integer >= 2");
    }
    s.bins = doc["bins"].get<int>();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) {
      return absl::InvalidArgumentError("'seed' must be a non-negative integer");
    }
    s.seed = doc["seed"].get<uint64_t>();
  }
  absl::Status valid = ValidateConfig(s.Detection());
  if (!valid.ok()) return valid;
  return s;
}

DetectionConfig SessionSpec::Detection() const {
  DetectionConfig cfg;
  cfg.epsilon = epsilon;
  cfg.delta = delta;
  cfg.measure.bins = bins;
  cfg.sampling.seed = seed;
  return cfg;
}

Session::Session(std::string id, std::string dir, SessionSpec spec,
                 Program original, Population pop)
    : id_(std::move(id)),
      dir_(std::move(dir)),
      spec_(std::move(spec)),
      original_(original),
      current_(std::move(original)),
      pop_(std::move(pop)) {
  for (const Param& param : original_.params()) {
    explicit_use_ = explicit_use_ || param.name == pop_.protected_column();
  }
}

DetectionConfig Session::Config() const {
  DetectionConfig cfg = spec_.Detection();
  cfg.measure.allow_protected = explicit_use_;
  return cfg;
}

absl::StatusOr<std::unique_ptr<Session>> Session::Create(
    const std::string& root, const SessionSpec& spec_in) {
  SessionSpec spec = spec_in;
  absl::Status valid = ValidateConfig(spec.Detection());
  if (!valid.ok()) return valid;
  std::error_code ec;
  spec.model_path = fs::absolute(spec.model_path, ec).string();
  spec.dataset_path = fs::absolute(spec.dataset_path, ec).string();
  absl::StatusOr<json> doc = ReadJsonFile(spec.model_path);
  if (!doc.ok()) return doc.status();
  absl::StatusOr<Program> program = Translate(*doc);
  if (!program.ok()) return program.status();
  absl::StatusOr<Population> pop = LoadPopulation(spec);
  if (!pop.ok()) return pop.status();

  fs::create_directories(root, ec);
  if (ec) return absl::InternalError(StrCat("cannot create '", root, "'"));
  int next = 1;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    const std::string name = entry.path().filename().string();
    if (ValidId(name)) next = std::max(next, std::stoi(name.substr(8)) + 1);
  }
  std::string id, dir;
  for (;; ++next) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "session-%04d", next);
    id = buf;
    dir = (fs::path(root) / id).string();
    if (fs::create_directory(dir, ec)) break;
    if (ec) return absl::InternalError(StrCat("cannot create '", dir, "'"));
  }

  std::unique_ptr<Session> s(
      new Session(id, dir, spec, *std::move(program), *std::move(pop)));
  json manifest = spec.ToJson();
  manifest["id"] = id;
  manifest["created"] = NowRfc3339();
  for (auto [name, text] : {std::pair{kModel, doc->dump(2)},
                            std::pair{kManifest, manifest.dump(2)}}) {
    absl::Status st = WriteFileAtomic(Join(dir, name), text + "\n");
    if (!st.ok()) return st;
  }
  absl::StatusOr<std::unique_ptr<JudgmentStore>> store =
      JudgmentStore::Open(Join(dir, kJudgments));
  if (!store.ok()) return store.status();
  s->store_ = *std::move(store);
  std::lock_guard<std::mutex> lock(s->mu_);
  absl::Status st = s->DetectLocked();
  if (!st.ok()) return st;
  return s;
}

absl::StatusOr<std::unique_ptr<Session>> Session::Open(const std::string& root,
                                                       const std::string& id) {
  const std::string dir = (fs::path(root) / id).string();
  if (!ValidId(id) || !fs::is_directory(dir)) {
    return absl::NotFoundError(StrCat("unknown session '", id, "'"));
  }
  absl::StatusOr<json> manifest = ReadJsonFile(Join(dir, kManifest));
  if (!manifest.ok()) return manifest.status();
  absl::StatusOr<SessionSpec> spec = SessionSpec::FromJson(*manifest);
  if (!spec.ok()) return spec.status();
  absl::StatusOr<Program> program = LoadModel(Join(dir, kModel));
  if (!program.ok()) return program.status();
  absl::StatusOr<Population> pop = LoadPopulation(*spec);
  if (!pop.ok()) return pop.status();
  std::unique_ptr<Session> s(
      new Session(id, dir, *spec, *program, *std::move(pop)));

  if (fs::exists(Join(dir, kEdits))) {
    absl::StatusOr<std::string> text = ReadFile(Join(dir, kEdits));
    if (!text.ok()) return text.status();
    std::istringstream lines(*text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      json doc = json::parse(line, nullptr, false);
      if (doc.is_discarded()) {
        if (lines.peek() == EOF) break;  // torn final append
        return absl::DataLossError(StrCat(id, ": unreadable edit log"));
      }
      absl::StatusOr<Edit> e = EditFromJson(doc);
      if (!e.ok()) return e.status();
      absl::StatusOr<Program> next = ApplyEdit(s->current_, *e);
      if (!next.ok()) {
        return absl::DataLossError(StrCat(id, ": edit log does not replay: ",
                                          std::string(next.status().message())));
      }
      s->current_ = *std::move(next);
      s->edits_.push_back(*std::move(e));
    }
  }
  absl::StatusOr<std::unique_ptr<JudgmentStore>> store =
      JudgmentStore::Open(Join(dir, kJudgments));
  if (!store.ok()) return store.status();
  s->store_ = *std::move(store);
  // Judgments may refer to witnesses of earlier programs in the edit log.
  std::set<std::string> judged;
  for (const Judgment& j : s->store_->History()) judged.insert(j.fingerprint);
  s->store_->AddKnownFingerprints(judged);
  std::lock_guard<std::mutex> lock(s->mu_);
  absl::Status st = s->DetectLocked();
  if (!st.ok()) return st;
  return s;
}

absl::Status Session::DetectLocked() {
  DetectionConfig cfg = Config();
  cfg.measure_all_influences = true;
  absl::StatusOr<DetectionResult> r = ProxyDetect(current_, pop_, cfg);
  if (!r.ok()) return r.status();
  detection_ = *std::move(r);
  store_->AddKnownFingerprints(FingerprintsOf(detection_.witnesses));
  return WriteSnapshotsLocked();
}

absl::Status Session::WriteSnapshotsLocked() const {
  json witnesses = json::array();
  for (const Witness& w : detection_.witnesses) {
    witnesses.push_back(ToJson(w, Judge(w, store_.get(), nullptr)));
  }
  const std::vector<std::pair<const char*, std::string>> files = {
      {"witnesses.json", witnesses.dump(2) + "\n"},
      {"subexpressions.csv",
       SubexpressionCsv(detection_.subexpressions, spec_.epsilon, spec_.delta)},
      {"subexpressions.json",
       SubexpressionReport(detection_.subexpressions, spec_.epsilon, spec_.delta)
               .dump(2) +
           "\n"},
      {"stats.json", ToJson(detection_.stats).dump(2) + "\n"},
      {"program.txt", Print(current_) + "\n"}};
  for (const auto& [name, text] : files) {
    absl::Status st = WriteFileAtomic(Join(dir_, name), text);
    if (!st.ok()) return st;
  }
  return absl::OkStatus();
}

Program Session::original() const {
  std::lock_guard<std::mutex> lock(mu_);
  return original_;
}

Program Session::current() const {
  std::lock_guard<std::mutex> lock(mu_);
  return current_;
}

std::vector<Edit> Session::edits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return edits_;
}

std::vector<Witness> Session::witnesses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return detection_.witnesses;
}

std::vector<SubexprRecord> Session::subexpressions() const {
  std::lock_guard<std::mutex> lock(mu_);
  return detection_.subexpressions;
}

DetectionStats Session::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return detection_.stats;
}

Verdict Session::VerdictFor(const Witness& w) const {
  return Judge(w, store_.get(), nullptr);
}

json Session::WitnessesJson() const {
  std::lock_guard<std::mutex> lock(mu_);
  json out = json::array();
  for (const Witness& w : detection_.witnesses) {
    out.push_back(ToJson(w, Judge(w, store_.get(), nullptr)));
  }
  return out;
}

absl::Status Session::RecordJudgment(Judgment j) {
  std::lock_guard<std::mutex> lock(mu_);
  absl::Status st = store_->Record(std::move(j));
  if (!st.ok()) return st;
  return WriteSnapshotsLocked();
}

std::vector<Judgment> Session::Judgments() const { return store_->History(); }

absl::StatusOr<RepairOutcome> Session::Repair(UndecidedPolicy undecided,
                                              const Policy* policy) {
  std::lock_guard<std::mutex> lock(mu_);
  absl::StatusOr<Utility> v = DefaultUtility(current_, pop_, explicit_use_);
  if (!v.ok()) return v.status();
  const JudgmentStore* store = store_.get();
  Oracle oracle = [store, policy](const Witness& w) {
    return Judge(w, store, policy);
  };
  absl::StatusOr<RepairOutcome> out = RepairLoop(
      current_, pop_, Config(), oracle, *v, undecided);
  if (!out.ok()) return out.status();
  for (const Edit& e : out->edits) {
    absl::Status st = AppendLine(Join(dir_, kEdits), ToJson(e).dump());
    if (!st.ok()) return st;
    edits_.push_back(e);
  }
  current_ = out->repaired;
  absl::Status st = DetectLocked();
  if (!st.ok()) return st;
  return out;
}

}  // namespace proxy_audit
