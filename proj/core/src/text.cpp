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

#include "bioqa/text.hpp"

#include <cctype>
#include <cstdint>
#include <string>

namespace bioqa::text {
namespace {

bool IsAsciiAlpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Length of a tag starting at s[i] == '<', or 0 if it is not a tag.
std::size_t TagLength(std::string_view s, std::size_t i) {
  if (i + 1 >= s.size()) return 0;
  char next = s[i + 1];
  if (!IsAsciiAlpha(next) && next != '/' && next != '!' && next != '?') return 0;
  auto close = s.find('>', i + 1);
  if (close == std::string_view::npos) return 0;
  // A '<' inside the candidate means the first one was a literal.
  auto inner_open = s.find('<', i + 1);
  if (inner_open != std::string_view::npos && inner_open < close) return 0;
  return close - i + 1;
}

void AppendUtf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes an entity at s[i] == '&'. Returns consumed length, 0 if none.
std::size_t DecodeEntity(std::string_view s, std::size_t i, std::string& out) {
  auto semi = s.find(';', i + 1);
  if (semi == std::string_view::npos || semi - i > 10) return 0;
  std::string_view name = s.substr(i + 1, semi - i - 1);
  if (name.empty()) return 0;
  if (name[0] == '#') {
    std::uint32_t cp = 0;
    bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
    std::string_view digits = name.substr(hex ? 2 : 1);
    if (digits.empty()) return 0;
    for (char c : digits) {
      int v;
      if (c >= '0' && c <= '9') {
        v = c - '0';
      } else if (hex && c >= 'a' && c <= 'f') {
        v = c - 'a' + 10;
      } else if (hex && c >= 'A' && c <= 'F') {
        v = c - 'A' + 10;
      } else {
        return 0;
      }
      cp = cp * (hex ? 16 : 10) + v;
      if (cp > 0x10FFFF) return 0;
    }
    if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    AppendUtf8(out, cp);
    return semi - i + 1;
  }
  static constexpr std::pair<std::string_view, std::string_view> kNamed[] = {
      {"amp", "&"}, {"lt", "<"},  {"gt", ">"},
      {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
  };
  for (const auto& [entity, replacement] : kNamed) {
    if (name == entity) {
      out.append(replacement);
      return semi - i + 1;
    }
  }
  return 0;
}

std::string StripOnce(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '<') {
      if (auto n = TagLength(s, i); n > 0) {
        out.push_back(' ');
        i += n;
        continue;
      }
    } else if (s[i] == '&') {
      if (auto n = DecodeEntity(s, i, out); n > 0) {
        i += n;
        continue;
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return CollapseWhitespace(out);
}

}  // namespace

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && IsSpace(s[b])) ++b;
  while (e > b && IsSpace(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string_view> SplitWhitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && IsSpace(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !IsSpace(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string CollapseWhitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (auto word : SplitWhitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(word);
  }
  return out;
}

std::size_t CountWords(std::string_view s) { return SplitWhitespace(s).size(); }

std::size_t CountCodePoints(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool ContainsMarkup(std::string_view s) {
  std::string scratch;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '<' && TagLength(s, i) > 0) return true;
    if (s[i] == '&' && DecodeEntity(s, i, scratch) > 0) return true;
  }
  return false;
}

std::string StripMarkup(std::string_view s) {
  // Decoded entities can spell new tags ("&lt;b&gt;"), so iterate.
  std::string current(s);
  for (int pass = 0; pass < 4; ++pass) {
    std::string next = StripOnce(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string ToLowerAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace bioqa::text
