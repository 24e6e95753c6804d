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

#ifndef BIOQA_TEXT_HPP_
#define BIOQA_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Small byte-level string helpers shared by the corpus, pipeline and report
// code. Whitespace here means ASCII whitespace; Unicode-aware processing
// lives in the scoring normalizer.
namespace bioqa::text {

bool IsSpace(char c);

std::string_view Trim(std::string_view s);

std::vector<std::string_view> SplitWhitespace(std::string_view s);

// Trims and replaces every run of whitespace with a single space.
std::string CollapseWhitespace(std::string_view s);

std::size_t CountWords(std::string_view s);

// Number of UTF-8 code points (lead bytes); invalid bytes count as one each.
std::size_t CountCodePoints(std::string_view s);

// True if the text holds an HTML/XML tag or a character entity.
bool ContainsMarkup(std::string_view s);

// Removes tags, decodes the common named and numeric entities, collapses
// whitespace.
std::string StripMarkup(std::string_view s);

bool StartsWith(std::string_view s, std::string_view prefix);

std::string ToLowerAscii(std::string_view s);

}  // namespace bioqa::text

#endif  // BIOQA_TEXT_HPP_
