// Copyright 2026 The bioqa Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bioqa/error.hpp"

#include <string>

namespace bioqa {

ManifestViolation::ManifestViolation(std::string source, long long expected,
                                     long long actual)
    : Error("manifest violation for source '" + source + "': expected " +
            std::to_string(expected) + " records, ingested " +
            std::to_string(actual)),
      source_(std::move(source)),
      expected_(expected),
      actual_(actual) {}

ProtocolError::ProtocolError(int status, const std::string& message)
    : Error("protocol error (HTTP " + std::to_string(status) + "): " + message),
      status_(status) {}

}  // namespace bioqa
