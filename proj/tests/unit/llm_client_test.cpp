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

#include <gtest/gtest.h>

#include "bioqa/error.hpp"
#include "bioqa/mocksvc.hpp"
#include "test_support.hpp"

namespace bioqa::llm {
namespace {

using nlohmann::json;

mocksvc::Transcript OneEntry(std::string prompt, std::vector<std::string> responses,
                             int status = 200) {
  mocksvc::Transcript t;
  mocksvc::TranscriptEntry e;
  e.prompt = std::move(prompt);
  e.responses = std::move(responses);
  e.status = status;
  t.entries.push_back(std::move(e));
  return t;
}

ClientOptions NoSleep(std::vector<std::chrono::milliseconds>* slept = nullptr) {
  ClientOptions o;
  o.sleep = [slept](std::chrono::milliseconds d) {
    if (slept) slept->push_back(d);
  };
  return o;
}

TEST(DecodingConfigTest, DefaultsAndValidation) {
  DecodingConfig d;
  EXPECT_EQ(d.temperature, 0.01);
  EXPECT_EQ(d.top_p, 0.95);
  EXPECT_NO_THROW(d.Validate());
  d.top_p = 0.0;
  EXPECT_THROW(d.Validate(), ConfigError);
  d = {};
  d.temperature = -0.1;
  EXPECT_THROW(d.Validate(), ConfigError);
  d = {};
  d.n_samples = 0;
  EXPECT_THROW(d.Validate(), ConfigError);
  d = {};
  d.seed = 9;
  EXPECT_EQ(json(d).get<DecodingConfig>(), d);
}

TEST(RequestBodyTest, WireFields) {
  DecodingConfig d;
  auto body = BuildRequestBody("m", "Question: x \n### Response##:", d);
  auto text = body.dump();
  EXPECT_NE(text.find("\"temperature\":0.01"), std::string::npos) << text;
  EXPECT_NE(text.find("\"top_p\":0.95"), std::string::npos) << text;
  EXPECT_EQ(body["messages"][0]["content"], "Question: x \n### Response##:");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_FALSE(body.contains("seed"));
  EXPECT_EQ(DecodingFromRequestBody(body), d);
}

TEST(CacheKeyTest, SensitiveToEveryField) {
  DecodingConfig d;
  auto base = CacheKey("m", "p", d);
  EXPECT_EQ(base, CacheKey("m", "p", d));
  EXPECT_EQ(base.size(), 64u);
  EXPECT_NE(base, CacheKey("m2", "p", d));
  EXPECT_NE(base, CacheKey("m", "p ", d));
  auto t = d;
  t.temperature = 0.0100000001;
  EXPECT_NE(base, CacheKey("m", "p", t));
  t = d;
  t.seed = 0;
  EXPECT_NE(base, CacheKey("m", "p", t));
  t = d;
  t.max_new_tokens = 255;
  EXPECT_NE(base, CacheKey("m", "p", t));
  // Length prefixing keeps field boundaries distinct.
  EXPECT_NE(CacheKey("ab", "c", d), CacheKey("a", "bc", d));
}

TEST(ParseResponseTest, Errors) {
  EXPECT_THROW(ParseResponseBody("not json", 1), DecodeError);
  EXPECT_THROW(ParseResponseBody(R"({"choices":[{"message":{}}]})", 1), DecodeError);
  EXPECT_THROW(ParseResponseBody(R"({"choices":[]})", 1), ProtocolError);
  auto r = ParseResponseBody(
      R"({"choices":[{"message":{"content":"a"},"finish_reason":"stop"},{"message":{"content":"b"}}]})",
      2);
  EXPECT_EQ(r.texts, (std::vector<std::string>{"a", "b"}));
}

TEST(BackoffTest, ExponentialAndCapped) {
  ModelEndpoint e;
  e.backoff_base = std::chrono::milliseconds(100);
  e.backoff_cap = std::chrono::milliseconds(350);
  EXPECT_EQ(BackoffDelay(e, 0).count(), 100);
  EXPECT_EQ(BackoffDelay(e, 1).count(), 200);
  EXPECT_EQ(BackoffDelay(e, 2).count(), 350);
  EXPECT_EQ(BackoffDelay(e, 60).count(), 350);
}

TEST(EndpointTest, DescribeRedactsToken) {
  ModelEndpoint e;
  e.auth_token = "sk-very-secret";
  EXPECT_EQ(e.Describe().find("sk-very-secret"), std::string::npos);
}

TEST(ClientTest, CompletesAgainstMockAndCaches) {
  mocksvc::MockServer server(OneEntry("hello", {"world"}));
  server.Start();
  testing::TempDir cache;
  ModelEndpoint e;
  e.base_url = server.base_url();
  auto options = NoSleep();
  options.cache_dir = cache.path();
  {
    Client client(e, options);
    auto r = client.Complete("hello", {});
    EXPECT_EQ(r.texts, std::vector<std::string>{"world"});
    EXPECT_FALSE(r.from_cache);
    auto again = client.Complete("hello", {});
    EXPECT_TRUE(again.from_cache);
    EXPECT_EQ(again.texts, r.texts);
    EXPECT_EQ(client.stats().requests_sent, 1);
    EXPECT_EQ(client.stats().cache_hits, 1);
  }
  // A second client on the same directory reuses the entry.
  Client client(e, options);
  EXPECT_TRUE(client.Complete("hello", {}).from_cache);
  EXPECT_EQ(server.request_count(), 1u);
  auto logged = server.request_log();
  ASSERT_EQ(logged.size(), 1u);
  EXPECT_EQ(logged[0].body["model"], e.model_name);
}

TEST(ClientTest, RetriesServerErrorsThenFails) {
  mocksvc::MockServer server(OneEntry("p", {"x"}, 503));
  server.Start();
  ModelEndpoint e;
  e.base_url = server.base_url();
  e.max_retries = 2;
  std::vector<std::chrono::milliseconds> slept;
  Client client(e, NoSleep(&slept));
  try {
    client.Complete("p", {});
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& err) {
    EXPECT_EQ(err.status(), 503);
    EXPECT_NE(std::string(err.what()).find("after 3 attempt(s)"), std::string::npos);
  }
  EXPECT_EQ(server.request_count(), 3u);
  EXPECT_EQ(slept.size(), 2u);
  EXPECT_EQ(client.stats().retries, 2);
}

TEST(ClientTest, ClientErrorsAreNotRetried) {
  mocksvc::MockServer server(OneEntry("p", {"x"}, 401));
  server.Start();
  ModelEndpoint e;
  e.base_url = server.base_url();
  Client client(e, NoSleep());
  EXPECT_THROW(client.Complete("p", {}), ProtocolError);
  EXPECT_EQ(server.request_count(), 1u);
}

TEST(ClientTest, ScriptedMissIsProtocolError) {
  mocksvc::MockServer server(OneEntry("p", {"x"}));
  server.Start();
  ModelEndpoint e;
  e.base_url = server.base_url();
  Client client(e, NoSleep());
  try {
    client.Complete("unknown prompt", {});
    FAIL();
  } catch (const ProtocolError& err) {
    EXPECT_EQ(err.status(), 404);
  }
}

TEST(ClientTest, UnreachableHostIsTransportError) {
  int port;
  {
    mocksvc::MockServer server(mocksvc::Transcript{});
    port = server.Start();
  }
  ModelEndpoint e;
  e.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  e.max_retries = 1;
  e.timeout = std::chrono::milliseconds(2000);
  Client client(e, NoSleep());
  EXPECT_THROW(client.Complete("p", {}), TransportError);
  EXPECT_EQ(client.stats().requests_sent, 2);
}

TEST(ClientTest, RejectsBadBaseUrl) {
  ModelEndpoint e;
  e.base_url = "ftp://host/v1";
  EXPECT_THROW(Client(e, NoSleep()), ConfigError);
}

TEST(ClientTest, MultipleSamples) {
  mocksvc::MockServer server(OneEntry("p", {"a", "b", "c"}));
  server.Start();
  ModelEndpoint e;
  e.base_url = server.base_url();
  Client client(e, NoSleep());
  DecodingConfig d;
  d.n_samples = 2;
  EXPECT_EQ(client.Complete("p", d).texts, (std::vector<std::string>{"a", "b"}));
}

}  // namespace
}  // namespace bioqa::llm
