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

#include "bioqa/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "bioqa/digest.hpp"
#include "bioqa/error.hpp"

namespace bioqa::config {
namespace {

using nlohmann::json;

constexpr std::string_view kRedacted = "<redacted>";

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false, /*ignore_comments=*/true);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return j;
}

void ApplyTokenOverride(RunConfig& c, const EnvLookup& env) {
  if (auto token = env(kTokenEnvVar); token && !token->empty()) c.endpoint.auth_token = *token;
}

}  // namespace

EnvLookup ProcessEnv() {
  return [](std::string_view name) -> std::optional<std::string> {
    const char* v = std::getenv(std::string(name).c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
}

std::string Interpolate(std::string_view s, const EnvLookup& env) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '$' || i + 1 >= s.size()) {
      out.push_back(s[i]);
      continue;
    }
    if (s[i + 1] == '$') {
      out.push_back('$');
      ++i;
      continue;
    }
    if (s[i + 1] != '{') {
      out.push_back(s[i]);
      continue;
    }
    auto close = s.find('}', i + 2);
    if (close == std::string_view::npos) {
      throw ConfigError("unterminated ${...} in '" + std::string(s) + "'");
    }
    std::string_view expr = s.substr(i + 2, close - i - 2);
    std::optional<std::string_view> fallback;
    if (auto sep = expr.find(":-"); sep != std::string_view::npos) {
      fallback = expr.substr(sep + 2);
      expr = expr.substr(0, sep);
    }
    if (expr.empty()) throw ConfigError("empty variable name in '" + std::string(s) + "'");
    auto value = env(expr);
    if (value && !value->empty()) {
      out += *value;
    } else if (fallback) {
      out += *fallback;
    } else {
      throw ConfigError("environment variable " + std::string(expr) + " is not set");
    }
    i = close;
  }
  return out;
}

json InterpolateAll(const json& j, const EnvLookup& env) {
  if (j.is_string()) return Interpolate(j.get<std::string>(), env);
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = InterpolateAll(v, env);
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(InterpolateAll(v, env));
    return out;
  }
  return j;
}

RunConfig FromJson(const json& j) {
  static const std::set<std::string> kKnown = {
      "endpoint", "decoding", "pipeline", "filter", "scorer", "cache",
      "max_in_flight", "id_mismatch_tolerance"};
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (kKnown.count(k) == 0) throw ConfigError("unknown config key '" + k + "'");
  }

  RunConfig c;
  try {
    if (auto e = j.find("endpoint"); e != j.end()) {
      auto& ep = c.endpoint;
      ep.base_url = e->value("base_url", ep.base_url);
      ep.model_name = e->value("model", ep.model_name);
      if (e->contains("auth_token") && !(*e)["auth_token"].is_null()) {
        auto token = (*e)["auth_token"].get<std::string>();
        if (!token.empty() && token != kRedacted) ep.auth_token = token;
      }
      ep.timeout = std::chrono::milliseconds(e->value("timeout_ms", ep.timeout.count()));
      ep.max_retries = e->value("max_retries", ep.max_retries);
      ep.backoff_base = std::chrono::milliseconds(e->value("backoff_ms", ep.backoff_base.count()));
      ep.backoff_cap =
          std::chrono::milliseconds(e->value("backoff_cap_ms", ep.backoff_cap.count()));
      if (ep.max_retries < 0) throw ConfigError("endpoint.max_retries must be non-negative");
      if (ep.timeout.count() <= 0) throw ConfigError("endpoint.timeout_ms must be positive");
    }
    if (auto p = j.find("pipeline"); p != j.end()) c.pipeline = p->get<pipeline::PipelineConfig>();
    if (auto d = j.find("decoding"); d != j.end()) {
      c.pipeline.stage1_decoding = d->get<llm::DecodingConfig>();
    }
    if (auto f = j.find("filter"); f != j.end()) c.filter = f->get<corpus::FilterPolicy>();
    if (auto s = j.find("scorer"); s != j.end()) c.scorer = s->get<scoring::ScorerConfig>();
    if (auto cache = j.find("cache"); cache != j.end()) {
      c.cache_dir = cache->value("dir", c.cache_dir);
      c.cache_enabled = cache->value("enabled", c.cache_enabled);
    }
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.id_mismatch_tolerance = j.value("id_mismatch_tolerance", c.id_mismatch_tolerance);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid run config: ") + e.what());
  }
  if (c.max_in_flight < 1) throw ConfigError("max_in_flight must be positive");
  scoring::ValidateThreshold(c.scorer.concept_threshold);
  c.pipeline.Validate();
  corpus::CompiledFilter check(c.filter);
  return c;
}

json ToJson(const RunConfig& c, bool include_secrets) {
  json endpoint = {{"base_url", c.endpoint.base_url},
                   {"model", c.endpoint.model_name},
                   {"timeout_ms", c.endpoint.timeout.count()},
                   {"max_retries", c.endpoint.max_retries},
                   {"backoff_ms", c.endpoint.backoff_base.count()},
                   {"backoff_cap_ms", c.endpoint.backoff_cap.count()}};
  if (!c.endpoint.auth_token) {
    endpoint["auth_token"] = nullptr;
  } else {
    endpoint["auth_token"] = include_secrets ? *c.endpoint.auth_token : std::string(kRedacted);
  }
  json pipeline = c.pipeline;
  pipeline.erase("stage1_decoding");
  return json{{"endpoint", endpoint},
              {"decoding", c.pipeline.stage1_decoding},
              {"pipeline", pipeline},
              {"filter", c.filter},
              {"scorer", c.scorer},
              {"cache", {{"dir", c.cache_dir}, {"enabled", c.cache_enabled}}},
              {"max_in_flight", c.max_in_flight},
              {"id_mismatch_tolerance", c.id_mismatch_tolerance}};
}

RunConfig Load(const std::filesystem::path& path, const EnvLookup& env) {
  RunConfig c = FromJson(InterpolateAll(ReadJsonFile(path), env));
  ApplyTokenOverride(c, env);
  return c;
}

RunConfig Defaults(const EnvLookup& env) {
  RunConfig c;
  ApplyTokenOverride(c, env);
  return c;
}

std::string Digest(const RunConfig& c) { return Sha256Hex(ToJson(c).dump()); }

json ReferenceFinetuneConfig() {
  return json{{"lora_rank", 64},           {"lora_alpha", 16},
              {"quantization_bits", 4},    {"learning_rate", 1e-4},
              {"epochs", 5},               {"optimizer", "paged_adamw_8bit"},
              {"scheduler", "cosine"},     {"seed", 42}};
}

FinetuneCheck ValidateFinetuneManifest(const json& manifest) {
  if (!manifest.is_object()) throw ConfigError("finetune manifest must be a JSON object");
  // Manifests may nest the hyperparameters under "config".
  const json& cfg = manifest.contains("config") && manifest["config"].is_object()
                        ? manifest["config"]
                        : manifest;
  FinetuneCheck check;
  check.manifest = manifest;
  const json reference = ReferenceFinetuneConfig();
  for (const auto& [key, expected] : reference.items()) {
    auto it = cfg.find(key);
    if (it == cfg.end()) throw ConfigError("finetune manifest lacks '" + key + "'");
    if (expected.is_string() != it->is_string() || expected.is_number() != it->is_number()) {
      throw ConfigError("finetune manifest field '" + key + "' has the wrong type");
    }
    bool same = expected.is_number_float()
                    ? std::abs(it->get<double>() - expected.get<double>()) <=
                          1e-12 * std::abs(expected.get<double>())
                    : *it == expected;
    if (!same) {
      check.deviations.push_back(key + ": expected " + expected.dump() + ", got " + it->dump());
    }
  }
  for (std::string_view key : {"mode", "base_model"}) {
    auto it = cfg.find(key);
    if (it == cfg.end() || !it->is_string()) {
      throw ConfigError("finetune manifest lacks string field '" + std::string(key) + "'");
    }
  }
  pipeline::ParseMode(cfg["mode"].get<std::string>());
  return check;
}

FinetuneCheck LoadFinetuneManifest(const std::filesystem::path& path) {
  return ValidateFinetuneManifest(ReadJsonFile(path));
}

}  // namespace bioqa::config
