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

#ifndef PROXY_AUDIT_TOOLS_CLI_H_
#define PROXY_AUDIT_TOOLS_CLI_H_

#include <iosfwd>

namespace proxy_audit::cli {

// Exit codes.
inline constexpr int kClean = 0;
inline constexpr int kInputError = 1;
inline constexpr int kViolations = 3;
inline constexpr int kSuspended = 4;

// `proxy-audit detect|repair|report|serve|translate ...`. Interactive
// answers are read from `in`.
int RunCli(int argc, const char* const* argv, std::istream& in,
           std::ostream& out, std::ostream& err);

}  // namespace proxy_audit::cli

#endif  // PROXY_AUDIT_TOOLS_CLI_H_
