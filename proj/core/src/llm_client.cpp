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

#include "bioqa/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <semaphore>
#include <thread>

#include "bioqa/digest.hpp"
#include "bioqa/error.hpp"

namespace bioqa::llm {
namespace {

using nlohmann::json;

constexpr std::string_view kCompletionsRoute = "/chat/completions";

std::string Snippet(std::string_view body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) return std::string(body);
  return std::string(body.substr(0, kMax)) + "...";
}

bool Retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

void DecodingConfig::Validate() const {
  if (!(std::isfinite(temperature) && temperature >= 0.0)) {
    throw ConfigError("temperature must be a non-negative number");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be positive");
  if (n_samples < 1) throw ConfigError("n_samples must be positive");
}

void to_json(json& j, const DecodingConfig& d) {
  j = json{{"temperature", d.temperature},
           {"top_p", d.top_p},
           {"max_new_tokens", d.max_new_tokens},
           {"n_samples", d.n_samples}};
  j["seed"] = d.seed ? json(*d.seed) : json(nullptr);
}

void from_json(const json& j, DecodingConfig& d) {
  DecodingConfig def;
  try {
    d.temperature = j.value("temperature", def.temperature);
    d.top_p = j.value("top_p", def.top_p);
    d.max_new_tokens = j.value("max_new_tokens", def.max_new_tokens);
    d.n_samples = j.value("n_samples", def.n_samples);
    auto seed = j.find("seed");
    d.seed = (seed == j.end() || seed->is_null())
                 ? std::nullopt
                 : std::optional<std::uint64_t>(seed->get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid decoding config: ") + e.what());
  }
  d.Validate();
}

std::string ModelEndpoint::Describe() const {
  return "endpoint{base_url=" + base_url + ", model=" + model_name +
         ", auth=" + (auth_token ? "<redacted>" : "none") +
         ", timeout_ms=" + std::to_string(timeout.count()) +
         ", max_retries=" + std::to_string(max_retries) + "}";
}

std::string CacheKey(std::string_view model_name, std::string_view prompt,
                     const DecodingConfig& decoding) {
  FieldHasher h;
  h.Add(std::string_view("bioqa-cache-v1"))
      .Add(model_name)
      .Add(prompt)
      .Add(decoding.temperature)
      .Add(decoding.top_p)
      .Add(static_cast<long long>(decoding.max_new_tokens))
      .Add(static_cast<long long>(decoding.n_samples))
      .Add(static_cast<long long>(decoding.seed.has_value()))
      .Add(static_cast<long long>(decoding.seed.value_or(0)));
  return h.HexDigest();
}

json BuildRequestBody(std::string_view model_name, std::string_view prompt,
                      const DecodingConfig& decoding) {
  json body = {
      {"model", model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", decoding.temperature},
      {"top_p", decoding.top_p},
      {"n", decoding.n_samples},
      {"max_tokens", decoding.max_new_tokens},
      {"stream", false},
  };
  if (decoding.seed) body["seed"] = *decoding.seed;
  return body;
}

DecodingConfig DecodingFromRequestBody(const json& body) {
  DecodingConfig d;
  try {
    d.temperature = body.at("temperature").get<double>();
    d.top_p = body.at("top_p").get<double>();
    d.n_samples = body.value("n", 1);
    d.max_new_tokens = body.at("max_tokens").get<int>();
    if (body.contains("seed")) d.seed = body["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DecodeError(std::string("request body lacks sampling fields: ") + e.what());
  }
  return d;
}

GenerationResponse ParseResponseBody(std::string_view body, int expected_n) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw DecodeError("response is not JSON: " + Snippet(body));
  auto choices = j.find("choices");
  if (!j.is_object() || choices == j.end() || !choices->is_array()) {
    throw DecodeError("response has no choices array: " + Snippet(body));
  }

  std::vector<std::pair<long long, const json*>> ordered;
  for (std::size_t i = 0; i < choices->size(); ++i) {
    const json& c = (*choices)[i];
    if (!c.is_object()) throw DecodeError("choice is not an object");
    long long index = c.contains("index") && c["index"].is_number_integer()
                          ? c["index"].get<long long>()
                          : static_cast<long long>(i);
    ordered.emplace_back(index, &c);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  GenerationResponse out;
  for (const auto& [index, c] : ordered) {
    const json* content = nullptr;
    if (auto m = c->find("message"); m != c->end() && m->is_object()) {
      if (auto ct = m->find("content"); ct != m->end()) content = &*ct;
    } else if (auto t = c->find("text"); t != c->end()) {
      content = &*t;
    }
    if (content == nullptr) throw DecodeError("choice has neither message.content nor text");
    if (content->is_null()) {
      out.texts.emplace_back();
    } else if (content->is_string()) {
      out.texts.push_back(content->get<std::string>());
    } else {
      throw DecodeError("choice content is not a string");
    }
    auto fr = c->find("finish_reason");
    out.finish_reasons.push_back(fr != c->end() && fr->is_string() ? fr->get<std::string>()
                                                                   : std::string());
  }
  if (static_cast<int>(out.texts.size()) != expected_n) {
    throw ProtocolError(200, "expected " + std::to_string(expected_n) + " choices, got " +
                                 std::to_string(out.texts.size()));
  }
  return out;
}

std::chrono::milliseconds BackoffDelay(const ModelEndpoint& endpoint, int retry) {
  auto delay = endpoint.backoff_base;
  for (int i = 0; i < retry && delay < endpoint.backoff_cap; ++i) delay *= 2;
  return std::min(delay, endpoint.backoff_cap);
}

struct Client::Target {
  std::string scheme_host_port;
  std::string path;
  std::counting_semaphore<1024> in_flight;

  Target(std::string shp, std::string p, int max_in_flight)
      : scheme_host_port(std::move(shp)), path(std::move(p)), in_flight(max_in_flight) {}
};

Client::Client(ModelEndpoint endpoint, ClientOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  const std::string& url = endpoint_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint base_url must include a scheme: " + url);
  }
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme '" + scheme + "'");
  }
  auto path_start = url.find('/', scheme_end + 3);
  std::string shp = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (shp.size() <= scheme_end + 3) throw ConfigError("endpoint base_url has no host: " + url);
  if (endpoint_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (options_.max_in_flight < 1 || options_.max_in_flight > 1024) {
    throw ConfigError("max_in_flight must be in [1, 1024]");
  }
  target_ = std::make_unique<Target>(shp, prefix + std::string(kCompletionsRoute),
                                     options_.max_in_flight);
  if (options_.cache_dir) cache_ = ResponseCache(*options_.cache_dir);
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

Client::~Client() = default;

ClientStats Client::stats() const {
  return ClientStats{requests_sent_.load(), cache_hits_.load(), retries_.load()};
}

GenerationResponse Client::Complete(std::string_view prompt, const DecodingConfig& decoding) {
  decoding.Validate();
  std::string key;
  if (cache_.enabled()) {
    key = CacheKey(endpoint_.model_name, prompt, decoding);
    if (auto hit = cache_.Get(key)) {
      ++cache_hits_;
      return *hit;
    }
  }
  std::string body = BuildRequestBody(endpoint_.model_name, prompt, decoding).dump();
  GenerationResponse response = Send(body, decoding.n_samples);
  if (cache_.enabled()) cache_.Put(key, response);
  return response;
}

GenerationResponse Client::Send(const std::string& body, int expected_n) {
  httplib::Headers headers;
  if (endpoint_.auth_token && !endpoint_.auth_token->empty()) {
    headers.emplace("Authorization", "Bearer " + *endpoint_.auth_token);
  }
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout);

  for (int attempt = 0;; ++attempt) {
    std::string failure;
    int failed_status = 0;
    {
      target_->in_flight.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{target_->in_flight};

      httplib::Client http(target_->scheme_host_port);
      http.set_connection_timeout(timeout);
      http.set_read_timeout(timeout);
      http.set_write_timeout(timeout);
      http.set_keep_alive(false);

      auto start = std::chrono::steady_clock::now();
      ++requests_sent_;
      auto res = http.Post(target_->path, headers, body, "application/json");
      if (!res) {
        failure = "transport failure contacting " + target_->scheme_host_port + ": " +
                  httplib::to_string(res.error());
      } else if (res->status >= 200 && res->status < 300) {
        GenerationResponse out = ParseResponseBody(res->body, expected_n);
        out.latency = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::steady_clock::now() - start);
        return out;
      } else if (Retryable(res->status)) {
        failed_status = res->status;
        failure = Snippet(res->body);
      } else {
        throw ProtocolError(res->status, Snippet(res->body));
      }
    }
    if (attempt >= endpoint_.max_retries) {
      std::string tries = " after " + std::to_string(attempt + 1) + " attempt(s)";
      if (failed_status != 0) throw ProtocolError(failed_status, failure + tries);
      throw TransportError(failure + tries);
    }
    ++retries_;
    options_.sleep(BackoffDelay(endpoint_, attempt));
  }
}

}  // namespace bioqa::llm
