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

#ifndef BIOQA_MOCKSVC_HPP_
#define BIOQA_MOCKSVC_HPP_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bioqa::mocksvc {

// One scripted prompt. Exactly one of `prompt` (exact bytes) or
// `prompt_hash` (hex SHA-256 of the prompt bytes) is set.
struct TranscriptEntry {
  std::optional<std::string> prompt;
  std::optional<std::string> prompt_hash;
  // Consumed one per generated choice; the last one repeats once exhausted.
  std::vector<std::string> responses;
  // Non-200 makes the entry reply with an error body instead (fault injection).
  int status = 200;
  std::chrono::milliseconds delay{0};
};

struct Transcript {
  std::vector<TranscriptEntry> entries;
  std::optional<std::string> default_response;

  // Throws ConfigError on malformed transcripts.
  static Transcript FromJson(const nlohmann::json& j);
  static Transcript Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
};

enum class MatchKind { kPrompt, kHash, kDefault, kMiss, kBadRequest };

std::string_view ToString(MatchKind kind);

struct LoggedRequest {
  std::string prompt;
  nlohmann::json body;
  MatchKind matched_by = MatchKind::kMiss;
  int status = 0;
};

struct Reply {
  int status = 200;
  nlohmann::json body;
  std::chrono::milliseconds delay{0};
};

// Transport-free replay logic: maps a chat-completions request body to a
// reply and records it. Thread-safe.
class ReplayEngine {
 public:
  explicit ReplayEngine(Transcript transcript);
  ~ReplayEngine();

  Reply Handle(const std::string& request_body);

  std::vector<LoggedRequest> request_log() const;
  std::size_t request_count() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

// Serves ReplayEngine over HTTP on {host}:{port}, route */chat/completions.
class MockServer {
 public:
  explicit MockServer(Transcript transcript);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds and starts serving on a background thread. Port 0 picks a free
  // port. Returns the bound port; throws IoError if binding fails.
  int Start(int port = 0, const std::string& host = "127.0.0.1");
  void Stop();
  // Blocks until Stop() is called from another thread.
  void Wait();

  int port() const { return port_; }
  // "http://host:port/v1", suitable for ModelEndpoint::base_url.
  std::string base_url() const;

  std::vector<LoggedRequest> request_log() const { return engine_.request_log(); }
  std::size_t request_count() const { return engine_.request_count(); }

 private:
  struct Impl;
  ReplayEngine engine_;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
};

}  // namespace bioqa::mocksvc

#endif  // BIOQA_MOCKSVC_HPP_
