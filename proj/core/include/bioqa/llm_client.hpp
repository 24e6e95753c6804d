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

#ifndef BIOQA_LLM_CLIENT_HPP_
#define BIOQA_LLM_CLIENT_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bioqa::llm {

inline constexpr double kDefaultTemperature = 0.01;
inline constexpr double kDefaultTopP = 0.95;

struct DecodingConfig {
  double temperature = kDefaultTemperature;
  double top_p = kDefaultTopP;
  int max_new_tokens = 256;
  int n_samples = 1;
  // Sent as the protocol's "seed" field when set. Distinguishes otherwise
  // identical resampling requests, including in the cache key.
  std::optional<std::uint64_t> seed;

  // Throws ConfigError when a field is out of range.
  void Validate() const;

  bool operator==(const DecodingConfig&) const = default;
};

void to_json(nlohmann::json& j, const DecodingConfig& d);
void from_json(const nlohmann::json& j, DecodingConfig& d);

struct ModelEndpoint {
  // e.g. "http://127.0.0.1:8080/v1"; requests go to {base_url}/chat/completions.
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string model_name = "default";
  std::optional<std::string> auth_token;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_cap{30'000};

  // Human-readable description with the token redacted.
  std::string Describe() const;
};

struct GenerationResponse {
  std::vector<std::string> texts;
  std::vector<std::string> finish_reasons;
  std::chrono::microseconds latency{0};
  bool from_cache = false;
};

// Hex SHA-256 over (model, prompt bytes, every decoding field).
std::string CacheKey(std::string_view model_name, std::string_view prompt,
                     const DecodingConfig& decoding);

// Chat-completions request body: a single user message plus sampling fields.
nlohmann::json BuildRequestBody(std::string_view model_name, std::string_view prompt,
                                const DecodingConfig& decoding);

// Inverse of BuildRequestBody for the sampling fields.
DecodingConfig DecodingFromRequestBody(const nlohmann::json& body);

// Throws DecodeError on unparseable bodies and ProtocolError when the number
// of choices differs from expected_n.
GenerationResponse ParseResponseBody(std::string_view body, int expected_n);

// Delay before retry number `retry` (0-based): base * 2^retry, capped.
std::chrono::milliseconds BackoffDelay(const ModelEndpoint& endpoint, int retry);

// On-disk content-addressed response store, one JSON file per key.
// Concurrent readers are fine; writers to the same key are serialized and
// each write is an atomic rename.
class ResponseCache {
 public:
  // A default-constructed cache is disabled.
  ResponseCache();
  explicit ResponseCache(std::filesystem::path dir);
  ~ResponseCache();
  ResponseCache(ResponseCache&&) noexcept;
  ResponseCache& operator=(ResponseCache&&) noexcept;

  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  std::optional<GenerationResponse> Get(const std::string& key) const;
  void Put(const std::string& key, const GenerationResponse& response);

 private:
  struct Locks;
  std::filesystem::path dir_;
  std::unique_ptr<Locks> locks_;
};

// Anything that turns a prompt into generations. The pipeline depends only
// on this.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual GenerationResponse Complete(std::string_view prompt,
                                      const DecodingConfig& decoding) = 0;
};

struct ClientOptions {
  std::optional<std::filesystem::path> cache_dir;
  int max_in_flight = 4;
  // Replaces std::this_thread::sleep_for between retries (tests).
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct ClientStats {
  long long requests_sent = 0;
  long long cache_hits = 0;
  long long retries = 0;
};

// HTTP chat-completions client. Thread-safe; share one instance across
// workers.
class Client : public Generator {
 public:
  // Throws ConfigError for unsupported URLs.
  explicit Client(ModelEndpoint endpoint, ClientOptions options = {});
  ~Client() override;

  GenerationResponse Complete(std::string_view prompt, const DecodingConfig& decoding) override;

  const ModelEndpoint& endpoint() const { return endpoint_; }
  ClientStats stats() const;

 private:
  GenerationResponse Send(const std::string& body, int expected_n);

  struct Target;
  ModelEndpoint endpoint_;
  ClientOptions options_;
  std::unique_ptr<Target> target_;
  ResponseCache cache_;
  std::atomic<long long> requests_sent_{0};
  std::atomic<long long> cache_hits_{0};
  std::atomic<long long> retries_{0};
};

}  // namespace bioqa::llm

#endif  // BIOQA_LLM_CLIENT_HPP_
