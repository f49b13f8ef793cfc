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

#ifndef PROXY_AUDIT_SERVICE_H_
#define PROXY_AUDIT_SERVICE_H_

#include <memory>
#include <optional>
#include <string>

#include "absl/status/statusor.h"
#include "proxy_audit/oracle.h"
#include "proxy_audit/repair.h"

namespace proxy_audit {

struct ServiceOptions {
  std::string session_root;
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // Requests must carry "Authorization: Bearer <token>" when set.
  std::optional<std::string> token;
  UndecidedPolicy undecided = UndecidedPolicy::kSuspend;
  std::optional<Policy> policy;
};

// The review API over a directory of sessions:
//
//   POST /sessions                          201 {"id"}
//   GET  /sessions/{id}/witnesses           witness documents with verdicts
//   GET  /sessions/{id}/subexpressions      subexpression rows
//   POST /sessions/{id}/judgments           204
//   POST /sessions/{id}/repair              {"edits", "residual_witnesses"},
//                                           409 while witnesses are undecided
//   GET  /sessions/{id}/program?form=text|diff
//
// Errors carry {"error": {"code", "message"}}. Every mutation is on disk
// before the response is sent.
class ReviewService {
 public:
  explicit ReviewService(ServiceOptions options);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  // Returns the bound port.
  absl::StatusOr<int> Bind();
  // Serves until Stop(); call after Bind().
  void Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_SERVICE_H_
