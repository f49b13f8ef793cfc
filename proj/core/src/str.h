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

#ifndef PROXY_AUDIT_SRC_STR_H_
#define PROXY_AUDIT_SRC_STR_H_

#include <string>
#include <string_view>

#include "absl/strings/str_cat.h"
#include "absl/strings/string_view.h"

namespace proxy_audit {

// The system absl is built with its own string_view type; these adapters
// let std::string_view arguments flow into absl::StrCat/StrAppend.
inline absl::string_view AsAbsl(std::string_view s) {
  return absl::string_view(s.data(), s.size());
}

namespace str_internal {
template <typename T>
const T& Pass(const T& v) {
  return v;
}
inline absl::string_view Pass(const std::string_view& v) { return AsAbsl(v); }
}  // namespace str_internal

template <typename... Args>
std::string StrCat(const Args&... args) {
  return absl::StrCat(str_internal::Pass(args)...);
}

template <typename... Args>
void StrAppend(std::string* out, const Args&... args) {
  absl::StrAppend(out, str_internal::Pass(args)...);
}

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_SRC_STR_H_
