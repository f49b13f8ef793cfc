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

#ifndef PROXY_AUDIT_SRC_CHECK_H_
#define PROXY_AUDIT_SRC_CHECK_H_

#include <cstdio>
#include <cstdlib>

// Aborts on a violated internal invariant. Used for programmer errors only;
// anything reachable from user input is reported through absl::Status.
#define PA_CHECK(cond, msg)                                              \
  do {                                                                   \
    if (!(cond)) {                                                       \
      std::fprintf(stderr, "%s:%d: check failed: %s: %s\n", __FILE__,    \
                   __LINE__, #cond, msg);                                \
      std::abort();                                                      \
    }                                                                    \
  } while (false)

#endif  // PROXY_AUDIT_SRC_CHECK_H_
