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

#include "bioqa/mocksvc.hpp"

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "bioqa/digest.hpp"
#include "bioqa/error.hpp"

namespace bioqa::mocksvc {
namespace {

using nlohmann::json;

json ErrorBody(std::string_view type, std::string_view message) {
  return json{{"error", {{"type", type}, {"message", message}}}};
}

}  // namespace

Transcript Transcript::FromJson(const json& j) {
  Transcript t;
  try {
    if (!j.is_object()) throw ConfigError("transcript must be a JSON object");
    for (const auto& e : j.value("entries", json::array())) {
      TranscriptEntry entry;
      if (e.contains("prompt")) entry.prompt = e["prompt"].get<std::string>();
      if (e.contains("prompt_hash")) entry.prompt_hash = e["prompt_hash"].get<std::string>();
      if (entry.prompt.has_value() == entry.prompt_hash.has_value()) {
        throw ConfigError("transcript entry needs exactly one of prompt / prompt_hash");
      }
      entry.responses = e.value("responses", std::vector<std::string>{});
      entry.status = e.value("status", 200);
      entry.delay = std::chrono::milliseconds(e.value("delay_ms", 0));
      if (entry.status == 200 && entry.responses.empty()) {
        throw ConfigError("transcript entry has no responses");
      }
      t.entries.push_back(std::move(entry));
    }
    if (j.contains("default_response") && !j["default_response"].is_null()) {
      t.default_response = j["default_response"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed transcript: ") + e.what());
  }
  return t;
}

Transcript Transcript::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open transcript " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError("transcript is not valid JSON: " + path.string());
  return FromJson(j);
}

json Transcript::ToJson() const {
  json entries_json = json::array();
  for (const auto& e : entries) {
    json ej = {{"responses", e.responses}};
    if (e.prompt) ej["prompt"] = *e.prompt;
    if (e.prompt_hash) ej["prompt_hash"] = *e.prompt_hash;
    if (e.status != 200) ej["status"] = e.status;
    if (e.delay.count() != 0) ej["delay_ms"] = e.delay.count();
    entries_json.push_back(std::move(ej));
  }
  json j = {{"entries", entries_json}};
  if (default_response) j["default_response"] = *default_response;
  return j;
}

std::string_view ToString(MatchKind kind) {
  switch (kind) {
    case MatchKind::kPrompt: return "prompt";
    case MatchKind::kHash: return "hash";
    case MatchKind::kDefault: return "default";
    case MatchKind::kMiss: return "miss";
    case MatchKind::kBadRequest: return "bad_request";
  }
  return "miss";
}

struct ReplayEngine::State {
  Transcript transcript;
  // Exact prompt and hash lookups; first entry wins on duplicates.
  std::unordered_map<std::string, std::size_t> by_prompt;
  std::unordered_map<std::string, std::size_t> by_hash;
  std::unique_ptr<std::atomic<std::size_t>[]> consumed;
  std::atomic<std::size_t> served{0};

  mutable std::mutex log_mu;
  std::vector<LoggedRequest> log;
};

ReplayEngine::ReplayEngine(Transcript transcript) : state_(std::make_unique<State>()) {
  state_->transcript = std::move(transcript);
  const auto& entries = state_->transcript.entries;
  state_->consumed = std::make_unique<std::atomic<std::size_t>[]>(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    state_->consumed[i] = 0;
    if (entries[i].prompt) state_->by_prompt.emplace(*entries[i].prompt, i);
    if (entries[i].prompt_hash) state_->by_hash.emplace(*entries[i].prompt_hash, i);
  }
}

ReplayEngine::~ReplayEngine() = default;

Reply ReplayEngine::Handle(const std::string& request_body) {
  LoggedRequest logged;
  Reply reply;
  auto record = [&] {
    logged.status = reply.status;
    std::lock_guard<std::mutex> lock(state_->log_mu);
    state_->log.push_back(std::move(logged));
  };

  json body = json::parse(request_body, nullptr, false);
  const json* messages = nullptr;
  if (!body.is_discarded() && body.is_object()) {
    if (auto it = body.find("messages"); it != body.end() && it->is_array() && !it->empty()) {
      messages = &*it;
    }
  }
  if (messages == nullptr || !messages->back().is_object() ||
      !messages->back().contains("content") || !messages->back()["content"].is_string()) {
    logged.matched_by = MatchKind::kBadRequest;
    if (!body.is_discarded()) logged.body = body;
    reply.status = 400;
    reply.body = ErrorBody("invalid_request", "expected a messages array ending in a user message");
    record();
    return reply;
  }
  logged.prompt = messages->back()["content"].get<std::string>();
  logged.body = body;
  int n = body.value("n", 1);
  if (n < 1) n = 1;

  const TranscriptEntry* entry = nullptr;
  std::size_t entry_index = 0;
  if (auto it = state_->by_prompt.find(logged.prompt); it != state_->by_prompt.end()) {
    entry_index = it->second;
    logged.matched_by = MatchKind::kPrompt;
  } else if (auto h = state_->by_hash.find(Sha256Hex(logged.prompt)); h != state_->by_hash.end()) {
    entry_index = h->second;
    logged.matched_by = MatchKind::kHash;
  } else {
    logged.matched_by = state_->transcript.default_response ? MatchKind::kDefault : MatchKind::kMiss;
  }

  std::vector<std::string> texts;
  if (logged.matched_by == MatchKind::kPrompt || logged.matched_by == MatchKind::kHash) {
    entry = &state_->transcript.entries[entry_index];
    reply.delay = entry->delay;
    if (entry->status != 200) {
      reply.status = entry->status;
      reply.body = ErrorBody("scripted_failure", "scripted status " + std::to_string(entry->status));
      record();
      return reply;
    }
    std::size_t first = state_->consumed[entry_index].fetch_add(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      std::size_t idx = std::min(first + k, entry->responses.size() - 1);
      texts.push_back(entry->responses[idx]);
    }
  } else if (logged.matched_by == MatchKind::kDefault) {
    texts.assign(static_cast<std::size_t>(n), *state_->transcript.default_response);
  } else {
    reply.status = 404;
    reply.body = ErrorBody("scripted_miss", "no scripted response for prompt (sha256 " +
                                                Sha256Hex(logged.prompt) + ")");
    record();
    return reply;
  }

  json choices = json::array();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    choices.push_back({{"index", i},
                       {"message", {{"role", "assistant"}, {"content", texts[i]}}},
                       {"finish_reason", "stop"}});
  }
  std::size_t serial = state_->served.fetch_add(1) + 1;
  reply.body = {{"id", "mock-" + std::to_string(serial)},
                {"object", "chat.completion"},
                {"model", body.value("model", std::string("mock"))},
                {"choices", choices}};
  record();
  return reply;
}

std::vector<LoggedRequest> ReplayEngine::request_log() const {
  std::lock_guard<std::mutex> lock(state_->log_mu);
  return state_->log;
}

std::size_t ReplayEngine::request_count() const {
  std::lock_guard<std::mutex> lock(state_->log_mu);
  return state_->log.size();
}

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::mutex mu;
  std::condition_variable stopped_cv;
  bool stopped = false;
};

MockServer::MockServer(Transcript transcript)
    : engine_(std::move(transcript)), impl_(std::make_unique<Impl>()) {
  impl_->server.Post(R"(.*/chat/completions)",
                     [this](const httplib::Request& req, httplib::Response& res) {
                       Reply reply = engine_.Handle(req.body);
                       if (reply.delay.count() > 0) std::this_thread::sleep_for(reply.delay);
                       res.status = reply.status;
                       res.set_content(reply.body.dump(), "application/json");
                     });
  impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
}

MockServer::~MockServer() { Stop(); }

int MockServer::Start(int port, const std::string& host) {
  if (impl_->thread.joinable()) throw Error("mock server already started");
  host_ = host;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    if (port_ < 0) throw IoError("mock server could not bind " + host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) {
      throw IoError("mock server could not bind " + host + ":" + std::to_string(port));
    }
    port_ = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->stopped = true;
  }
  impl_->stopped_cv.notify_all();
}

void MockServer::Wait() {
  std::unique_lock<std::mutex> lock(impl_->mu);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

std::string MockServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_) + "/v1";
}

}  // namespace bioqa::mocksvc
