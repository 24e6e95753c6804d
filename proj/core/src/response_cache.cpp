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

#include <array>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "bioqa/error.hpp"
#include "bioqa/llm_client.hpp"

namespace bioqa::llm {
namespace {

using nlohmann::json;

constexpr std::size_t kLockStripes = 64;

std::size_t Stripe(const std::string& key) { return std::hash<std::string>{}(key) % kLockStripes; }

}  // namespace

struct ResponseCache::Locks {
  std::array<std::mutex, kLockStripes> stripes;
};

ResponseCache::ResponseCache(std::filesystem::path dir)
    : dir_(std::move(dir)), locks_(std::make_unique<Locks>()) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

ResponseCache::ResponseCache() = default;
ResponseCache::~ResponseCache() = default;
ResponseCache::ResponseCache(ResponseCache&&) noexcept = default;
ResponseCache& ResponseCache::operator=(ResponseCache&&) noexcept = default;

std::optional<GenerationResponse> ResponseCache::Get(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(dir_ / (key + ".json"), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  // A torn or foreign file is a miss, not an error.
  if (j.is_discarded() || !j.is_object() || j.value("key", "") != key) return std::nullopt;
  try {
    GenerationResponse r;
    r.texts = j.at("texts").get<std::vector<std::string>>();
    r.finish_reasons = j.at("finish_reasons").get<std::vector<std::string>>();
    r.from_cache = true;
    return r;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::Put(const std::string& key, const GenerationResponse& response) {
  if (!enabled()) return;
  json j = {{"key", key}, {"texts", response.texts}, {"finish_reasons", response.finish_reasons}};
  std::lock_guard<std::mutex> lock(locks_->stripes[Stripe(key)]);
  std::ostringstream tid;
  tid << std::this_thread::get_id();
  auto final_path = dir_ / (key + ".json");
  auto tmp_path = dir_ / (key + ".json.tmp." + tid.str());
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp_path.string());
    out << j.dump() << '\n';
    if (!out) throw IoError("cannot write cache entry " + tmp_path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) {
    std::filesystem::remove(tmp_path, ec);
    throw IoError("cannot commit cache entry " + final_path.string());
  }
}

}  // namespace bioqa::llm
