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

#ifndef BIOQA_DIGEST_HPP_
#define BIOQA_DIGEST_HPP_

#include <string>
#include <string_view>

namespace bioqa {

// Lowercase hex SHA-256 of the given bytes.
std::string Sha256Hex(std::string_view bytes);

// Incremental SHA-256 for hashing several fields without concatenating them.
// Fields are length-prefixed so ("ab","c") and ("a","bc") differ.
class FieldHasher {
 public:
  FieldHasher();
  ~FieldHasher();
  FieldHasher(const FieldHasher&) = delete;
  FieldHasher& operator=(const FieldHasher&) = delete;

  FieldHasher& Add(std::string_view field);
  // Unframed bytes; only safe as the sole input.
  FieldHasher& AddRaw(std::string_view bytes);
  FieldHasher& Add(double value);
  FieldHasher& Add(long long value);
  std::string HexDigest();

 private:
  void* ctx_;
  bool finished_ = false;
};

}  // namespace bioqa

#endif  // BIOQA_DIGEST_HPP_
