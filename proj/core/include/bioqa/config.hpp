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

#ifndef BIOQA_CONFIG_HPP_
#define BIOQA_CONFIG_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bioqa/corpus.hpp"
#include "bioqa/llm_client.hpp"
#include "bioqa/pipeline.hpp"
#include "bioqa/scoring.hpp"

namespace bioqa::config {

// Environment variable that overrides endpoint.auth_token.
inline constexpr std::string_view kTokenEnvVar = "BIOQA_API_TOKEN";

// Everything a run depends on. Defaults are complete; a config file only
// needs the fields it changes.
struct RunConfig {
  llm::ModelEndpoint endpoint;
  pipeline::PipelineConfig pipeline;
  corpus::FilterPolicy filter;
  scoring::ScorerConfig scorer;
  std::string cache_dir = ".bioqa-cache";
  bool cache_enabled = true;
  int max_in_flight = 4;
  double id_mismatch_tolerance = 0.0;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

EnvLookup ProcessEnv();

// Expands ${NAME} and ${NAME:-fallback}. "$$" is a literal '$'. Throws
// ConfigError for unset variables without a fallback.
std::string Interpolate(std::string_view s, const EnvLookup& env);

// Applies Interpolate to every string value in the document.
nlohmann::json InterpolateAll(const nlohmann::json& j, const EnvLookup& env);

// Overlays `j` on the defaults. Unknown top-level keys are rejected.
RunConfig FromJson(const nlohmann::json& j);

// Canonical form. The auth token is replaced by "<redacted>" unless
// include_secrets is set.
nlohmann::json ToJson(const RunConfig& c, bool include_secrets = false);

// Reads a JSON config file, interpolates environment variables, and applies
// the token override.
RunConfig Load(const std::filesystem::path& path, const EnvLookup& env = ProcessEnv());

// Defaults plus the token override.
RunConfig Defaults(const EnvLookup& env = ProcessEnv());

// SHA-256 of the redacted canonical JSON.
std::string Digest(const RunConfig& c);

// Hyperparameters recorded by the fine-tuning recipe.
struct FinetuneCheck {
  nlohmann::json manifest;
  // "field: expected X, got Y" for each value that differs from the
  // reference recipe.
  std::vector<std::string> deviations;
};

// Throws ConfigError when required fields are missing or mistyped.
FinetuneCheck ValidateFinetuneManifest(const nlohmann::json& manifest);
FinetuneCheck LoadFinetuneManifest(const std::filesystem::path& path);

// Reference recipe values the manifest is checked against.
nlohmann::json ReferenceFinetuneConfig();

}  // namespace bioqa::config

#endif  // BIOQA_CONFIG_HPP_
