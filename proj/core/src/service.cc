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

#include "proxy_audit/service.h"

#include <map>
#include <mutex>
#include <string>

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "proxy_audit/report.h"
#include "proxy_audit/session.h"
#include "proxy_audit/syntax.h"
#include "str.h"

namespace proxy_audit {

using nlohmann::json;

namespace {

std::string CodeName(absl::StatusCode code) {
  switch (code) {
    case absl::StatusCode::kInvalidArgument: return "invalid_argument";
    case absl::StatusCode::kNotFound: return "not_found";
    case absl::StatusCode::kFailedPrecondition: return "failed_precondition";
    case absl::StatusCode::kDataLoss: return "data_loss";
    case absl::StatusCode::kUnauthenticated: return "unauthenticated";
    case absl::StatusCode::kAborted: return "suspended";
    default: return "internal";
  }
}

void SendError(httplib::Response& res, int http, absl::StatusCode code,
               const std::string& message, json extra = json::object()) {
  json body = {{"error", {{"code", CodeName(code)}, {"message", message}}}};
  body.update(extra);
  res.status = http;
  res.set_content(body.dump(), "application/json");
}

void SendStatus(httplib::Response& res, const absl::Status& s) {
  int http = 500;
  switch (s.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition: http = 400; break;
    case absl::StatusCode::kNotFound: http = 404; break;
    default: break;
  }
  SendError(res, http, s.code(), std::string(s.message()));
}

void SendJson(httplib::Response& res, const json& body, int http = 200) {
  res.status = http;
  res.set_content(body.dump(), "application/json");
}

absl::StatusOr<json> Body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json doc = json::parse(req.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return absl::InvalidArgumentError("request body must be a JSON object");
  }
  return doc;
}

}  // namespace

struct ReviewService::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::mutex mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  absl::StatusOr<std::shared_ptr<Session>> Find(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = sessions.find(id);
    if (it != sessions.end()) return it->second;
    absl::StatusOr<std::unique_ptr<Session>> s =
        Session::Open(options.session_root, id);
    if (!s.ok()) return s.status();
    std::shared_ptr<Session> shared = *std::move(s);
    sessions.emplace(id, shared);
    return shared;
  }

  void CreateSession(const httplib::Request& req, httplib::Response& res) {
    absl::StatusOr<json> body = Body(req);
    if (!body.ok()) return SendStatus(res, body.status());
    absl::StatusOr<SessionSpec> spec = SessionSpec::FromJson(*body);
    if (!spec.ok()) return SendStatus(res, spec.status());
    absl::StatusOr<std::unique_ptr<Session>> s;
    {
      std::lock_guard<std::mutex> lock(mu);
      s = Session::Create(options.session_root, *spec);
      if (s.ok()) {
        const std::string id = (*s)->id();
        sessions.emplace(id, std::shared_ptr<Session>(*std::move(s)));
        return SendJson(res, {{"id", id}}, 201);
      }
    }
    // Unreadable inputs are the caller's mistake.
    const absl::Status& st = s.status();
    if (st.code() == absl::StatusCode::kNotFound) {
      return SendError(res, 400, st.code(), std::string(st.message()));
    }
    SendStatus(res, st);
  }

  void Witnesses(const std::string& id, httplib::Response& res) {
    absl::StatusOr<std::shared_ptr<Session>> s = Find(id);
    if (!s.ok()) return SendStatus(res, s.status());
    SendJson(res, (*s)->WitnessesJson());
  }

  void Subexpressions(const std::string& id, httplib::Response& res) {
    absl::StatusOr<std::shared_ptr<Session>> s = Find(id);
    if (!s.ok()) return SendStatus(res, s.status());
    SendJson(res, SubexpressionRows((*s)->subexpressions()));
  }

  void PostJudgment(const std::string& id, const httplib::Request& req,
                    httplib::Response& res) {
    absl::StatusOr<std::shared_ptr<Session>> s = Find(id);
    if (!s.ok()) return SendStatus(res, s.status());
    absl::StatusOr<json> body = Body(req);
    if (!body.ok()) return SendStatus(res, body.status());
    absl::StatusOr<Judgment> j = JudgmentFromJson(*body);
    if (!j.ok()) return SendStatus(res, j.status());
    j->timestamp.clear();
    absl::Status st = (*s)->RecordJudgment(*std::move(j));
    if (!st.ok()) return SendStatus(res, st);
    res.status = 204;
  }

  void PostRepair(const std::string& id, httplib::Response& res) {
    absl::StatusOr<std::shared_ptr<Session>> s = Find(id);
    if (!s.ok()) return SendStatus(res, s.status());
    absl::StatusOr<RepairOutcome> out = (*s)->Repair(
        options.undecided, options.policy ? &*options.policy : nullptr);
    if (!out.ok()) return SendStatus(res, out.status());
    json edits = json::array();
    for (const Edit& e : out->edits) edits.push_back(ToJson(e));
    json residual = json::array();
    for (const Witness& w : out->residual_witnesses) {
      residual.push_back(ToJson(w, (*s)->VerdictFor(w)));
    }
    if (out->suspended) {
      json pending = json::array();
      for (const Witness& w : out->pending) {
        pending.push_back(ToJson(w, Verdict::kUndecided));
      }
      return SendError(res, 409, absl::StatusCode::kAborted,
                       "undecided witnesses need judgments",
                       {{"edits", edits}, {"pending", pending}});
    }
    SendJson(res, {{"edits", edits}, {"residual_witnesses", residual}});
  }

  void GetProgram(const std::string& id, const httplib::Request& req,
                  httplib::Response& res) {
    absl::StatusOr<std::shared_ptr<Session>> s = Find(id);
    if (!s.ok()) return SendStatus(res, s.status());
    const std::string form =
        req.has_param("form") ? req.get_param_value("form") : "text";
    if (form == "text") {
      res.set_content(Print((*s)->current()) + "\n", "text/plain");
    } else if (form == "diff") {
      res.set_content(
          ProgramDiff((*s)->original(), (*s)->edits(), (*s)->current()),
          "text/plain");
    } else {
      SendError(res, 400, absl::StatusCode::kInvalidArgument,
                StrCat("unknown form '", form, "'"));
    }
  }

  void Route() {
    if (options.token) {
      const std::string expected = "Bearer " + *options.token;
      server.set_pre_routing_handler(
          [expected](const httplib::Request& req, httplib::Response& res) {
            if (req.get_header_value("Authorization") == expected) {
              return httplib::Server::HandlerResponse::Unhandled;
            }
            SendError(res, 401, absl::StatusCode::kUnauthenticated,
                      "missing or wrong bearer token");
            return httplib::Server::HandlerResponse::Handled;
          });
    }
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res,
           std::exception_ptr ep) {
          std::string what = "unexpected failure";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          SendError(res, 500, absl::StatusCode::kInternal, what);
        });
    server.Post("/sessions", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      CreateSession(req, res);
    });
    server.Get(R"(/sessions/([^/]+)/witnesses)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Witnesses(req.matches[1], res);
               });
    server.Get(R"(/sessions/([^/]+)/subexpressions)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Subexpressions(req.matches[1], res);
               });
    server.Post(R"(/sessions/([^/]+)/judgments)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  PostJudgment(req.matches[1], req, res);
                });
    server.Post(R"(/sessions/([^/]+)/repair)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  PostRepair(req.matches[1], res);
                });
    server.Get(R"(/sessions/([^/]+)/program)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 GetProgram(req.matches[1], req, res);
               });
  }
};

ReviewService::ReviewService(ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->Route();
}

ReviewService::~ReviewService() { Stop(); }

absl::StatusOr<int> ReviewService::Bind() {
  const ServiceOptions& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
    if (port < 0) port = 0;
  } else if (!impl_->server.bind_to_port(o.host, port)) {
    port = 0;
  }
  if (port <= 0) {
    return absl::UnavailableError(
        StrCat("cannot bind ", o.host, ":", o.port));
  }
  return port;
}

void ReviewService::Serve() { impl_->server.listen_after_bind(); }

void ReviewService::Stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace proxy_audit
