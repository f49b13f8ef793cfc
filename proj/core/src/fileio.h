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

#ifndef PROXY_AUDIT_SRC_FILEIO_H_
#define PROXY_AUDIT_SRC_FILEIO_H_

#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace proxy_audit {

// Writes through a temporary file and a rename.
absl::Status WriteFileAtomic(const std::string& path, const std::string& text);
// Appends `line` and a newline, synced to disk before returning.
absl::Status AppendLine(const std::string& path, const std::string& line);
absl::StatusOr<std::string> ReadFile(const std::string& path);

}  // namespace proxy_audit

#endif  // PROXY_AUDIT_SRC_FILEIO_H_
