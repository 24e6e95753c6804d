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

#include "bioqa/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdint>
#include <stdexcept>

namespace bioqa {
namespace {

std::string ToHex(const unsigned char* data, unsigned int len) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[data[i] >> 4]);
    out.push_back(kHex[data[i] & 0xf]);
  }
  return out;
}

// Fixed little-endian encoding keeps digests identical across platforms.
std::array<unsigned char, 8> LittleEndian(std::uint64_t v) {
  std::array<unsigned char, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
  return out;
}

EVP_MD_CTX* Ctx(void* p) { return static_cast<EVP_MD_CTX*>(p); }

}  // namespace

std::string Sha256Hex(std::string_view bytes) {
  FieldHasher h;
  return h.AddRaw(bytes).HexDigest();
}

FieldHasher::FieldHasher() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(Ctx(ctx_), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("EVP sha256 init failed");
  }
}

FieldHasher::~FieldHasher() { EVP_MD_CTX_free(Ctx(ctx_)); }

FieldHasher& FieldHasher::Add(std::string_view field) {
  auto len = LittleEndian(field.size());
  EVP_DigestUpdate(Ctx(ctx_), len.data(), len.size());
  EVP_DigestUpdate(Ctx(ctx_), field.data(), field.size());
  return *this;
}

FieldHasher& FieldHasher::AddRaw(std::string_view bytes) {
  EVP_DigestUpdate(Ctx(ctx_), bytes.data(), bytes.size());
  return *this;
}

FieldHasher& FieldHasher::Add(double value) {
  auto bits = LittleEndian(std::bit_cast<std::uint64_t>(value));
  EVP_DigestUpdate(Ctx(ctx_), bits.data(), bits.size());
  return *this;
}

FieldHasher& FieldHasher::Add(long long value) {
  auto bits = LittleEndian(static_cast<std::uint64_t>(value));
  EVP_DigestUpdate(Ctx(ctx_), bits.data(), bits.size());
  return *this;
}

std::string FieldHasher::HexDigest() {
  if (finished_) throw std::logic_error("FieldHasher digest already taken");
  finished_ = true;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(Ctx(ctx_), md, &len);
  return ToHex(md, len);
}

}  // namespace bioqa
