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

#include "bioqa/scoring.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "bioqa/digest.hpp"
#include "bioqa/error.hpp"
#include "bioqa/text.hpp"

namespace bioqa::scoring {
namespace {

const icu::Normalizer2& Compatibility(bool decompose) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = decompose ? icu::Normalizer2::getNFKDInstance(status)
                                        : icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error(std::string("ICU normalizer unavailable: ") + u_errorName(status));
  }
  return *n;
}

bool IsArticle(std::string_view token) {
  return token == "a" || token == "an" || token == "the";
}

// One pass of fold -> lowercase -> punctuation -> articles -> whitespace.
std::string NormalizeOnce(std::string_view raw, const NormalizeOptions& options) {
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));

  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString folded =
      Compatibility(options.fold_diacritics).normalize(input, status);
  if (U_FAILURE(status)) folded = input;

  // Lowercase with the simple per-code-point mapping so the output never
  // grows new combining marks ("İ" -> "i", not "i̇").
  icu::UnicodeString cleaned;
  for (int32_t i = 0; i < folded.length();) {
    UChar32 c = folded.char32At(i);
    i += U16_LENGTH(c);
    int8_t type = u_charType(c);
    if (options.fold_diacritics && type == U_NON_SPACING_MARK) continue;
    if (type == U_FORMAT_CHAR) continue;
    if (type == U_DASH_PUNCTUATION) {
      cleaned.append(static_cast<UChar32>(' '));
      continue;
    }
    if (u_ispunct(c)) continue;
    if (u_isUWhiteSpace(c) || type == U_CONTROL_CHAR) {
      cleaned.append(static_cast<UChar32>(' '));
      continue;
    }
    cleaned.append(u_tolower(c));
  }

  std::string utf8;
  cleaned.toUTF8String(utf8);

  std::string out;
  out.reserve(utf8.size());
  for (auto token : text::SplitWhitespace(utf8)) {
    if (IsArticle(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(token);
  }
  return out;
}

}  // namespace

std::vector<std::string_view> NormalizedAnswer::tokens() const {
  return text::SplitWhitespace(text_);
}

NormalizedAnswer NormalizeAnswer(std::string_view raw, const NormalizeOptions& options) {
  // Removing a character can expose a new composition or article, so run
  // the pass to its fixed point. Two passes suffice in practice.
  std::string current = NormalizeOnce(raw, options);
  for (int pass = 0; pass < 4; ++pass) {
    std::string next = NormalizeOnce(current, options);
    if (next == current) break;
    current = std::move(next);
  }
  return NormalizedAnswer(std::move(current));
}

SynonymTable SynonymTable::FromPairs(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const NormalizeOptions& options) {
  SynonymTable table;
  for (const auto& [raw_alias, raw_canonical] : pairs) {
    std::string alias = NormalizeAnswer(raw_alias, options).text();
    std::string canonical = NormalizeAnswer(raw_canonical, options).text();
    if (alias.empty() || canonical.empty()) {
      throw ConfigError("synonym entry '" + raw_alias + "' -> '" + raw_canonical +
                        "' normalizes to an empty string");
    }
    if (alias == canonical) {
      throw ConfigError("synonym alias '" + raw_alias + "' maps to itself");
    }
    auto [it, inserted] = table.entries_.emplace(alias, canonical);
    if (!inserted && it->second != canonical) {
      throw ConfigError("synonym alias '" + alias + "' maps to both '" + it->second +
                        "' and '" + canonical + "'");
    }
  }
  for (const auto& [alias, canonical] : table.entries_) {
    if (table.entries_.count(canonical) > 0) {
      throw ConfigError("synonym canonical form '" + canonical +
                        "' is itself an alias (chained or cyclic mapping)");
    }
  }
  return table;
}

SynonymTable SynonymTable::ParseTsv(std::string_view content, std::string_view origin,
                                    const NormalizeOptions& options) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto eol = content.find('\n', pos);
    std::string_view line = content.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? content.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::Trim(line).empty() || text::Trim(line).front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected exactly two tab-separated columns");
    }
    pairs.emplace_back(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
  }
  try {
    return FromPairs(pairs, options);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
}

SynonymTable SynonymTable::LoadTsv(const std::filesystem::path& path,
                                   const NormalizeOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open synonym table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseTsv(buf.str(), path.string(), options);
}

SynonymTable SynonymTable::DefaultChromosomeAliases() {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> names;
  for (int n = 1; n <= 22; ++n) names.push_back(std::to_string(n));
  names.push_back("X");
  names.push_back("Y");
  for (const auto& n : names) {
    std::string canonical = "chromosome " + n;
    pairs.emplace_back("chr " + n, canonical);
    pairs.emplace_back("chr" + n, canonical);
    pairs.emplace_back(n + " chromosome", canonical);
  }
  return FromPairs(pairs);
}

std::optional<std::string_view> SynonymTable::Lookup(const NormalizedAnswer& answer) const {
  auto it = entries_.find(answer.text());
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::string SynonymTable::Digest() const { return Sha256Hex(ToTsv()); }

std::string SynonymTable::ToTsv() const {
  std::string out;
  for (const auto& [alias, canonical] : entries_) {
    out += alias;
    out += '\t';
    out += canonical;
    out += '\n';
  }
  return out;
}

NormalizedAnswer ResolveSynonyms(const NormalizedAnswer& answer, const SynonymTable& table) {
  if (auto canonical = table.Lookup(answer)) {
    return NormalizedAnswer(std::string(*canonical));
  }
  return answer;
}

bool ExactMatch(std::string_view prediction, std::string_view gold,
                const SynonymTable& table, const NormalizeOptions& options) {
  return ResolveSynonyms(NormalizeAnswer(prediction, options), table) ==
         ResolveSynonyms(NormalizeAnswer(gold, options), table);
}

double TokenF1(const NormalizedAnswer& prediction, const NormalizedAnswer& gold) {
  auto pred_tokens = prediction.tokens();
  auto gold_tokens = gold.tokens();
  if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
  if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;

  std::unordered_map<std::string_view, int> gold_counts;
  for (auto t : gold_tokens) ++gold_counts[t];
  int overlap = 0;
  for (auto t : pred_tokens) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  double precision = static_cast<double>(overlap) / pred_tokens.size();
  double recall = static_cast<double>(overlap) / gold_tokens.size();
  return 2.0 * precision * recall / (precision + recall);
}

double TokenF1(std::string_view prediction, std::string_view gold,
               const NormalizeOptions& options) {
  return TokenF1(NormalizeAnswer(prediction, options), NormalizeAnswer(gold, options));
}

MatchResult::MatchResult(bool em, bool concept_match, double token_f1)
    : em_(em), concept_(concept_match), token_f1_(token_f1) {
  if (!(token_f1 >= 0.0 && token_f1 <= 1.0)) {
    throw std::logic_error("MatchResult: token_f1 outside [0,1]");
  }
  if (em && !concept_match) throw std::logic_error("MatchResult: em without concept");
  if (em && token_f1 != 1.0) throw std::logic_error("MatchResult: em with token_f1 < 1");
}

void ValidateThreshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("concept threshold must be in (0, 1], got " +
                      std::to_string(threshold));
  }
}

MatchResult ConceptMatch(std::string_view prediction, std::string_view gold,
                         const SynonymTable& table, double threshold,
                         const NormalizeOptions& options) {
  ValidateThreshold(threshold);
  auto pred = ResolveSynonyms(NormalizeAnswer(prediction, options), table);
  auto ref = ResolveSynonyms(NormalizeAnswer(gold, options), table);
  bool em = pred == ref;
  double f1 = TokenF1(pred, ref);
  return MatchResult(em, em || f1 >= threshold, f1);
}

void to_json(nlohmann::json& j, const ScorerConfig& c) {
  j = nlohmann::json{{"concept_threshold", c.concept_threshold},
                     {"fold_diacritics", c.normalize.fold_diacritics},
                     {"synonyms", c.synonyms}};
}

void from_json(const nlohmann::json& j, ScorerConfig& c) {
  ScorerConfig d;
  c.concept_threshold = j.value("concept_threshold", d.concept_threshold);
  c.normalize.fold_diacritics = j.value("fold_diacritics", d.normalize.fold_diacritics);
  c.synonyms = j.value("synonyms", d.synonyms);
}

SynonymTable LoadSynonyms(const ScorerConfig& config) {
  if (config.synonyms == "default") return SynonymTable::DefaultChromosomeAliases();
  if (config.synonyms == "none" || config.synonyms.empty()) return SynonymTable();
  return SynonymTable::LoadTsv(config.synonyms, config.normalize);
}

Scorer::Scorer(SynonymTable table, double threshold, NormalizeOptions options)
    : table_(std::move(table)), threshold_(threshold), options_(options) {
  ValidateThreshold(threshold_);
}

MatchResult Scorer::Match(std::string_view prediction, std::string_view gold) const {
  return ConceptMatch(prediction, gold, table_, threshold_, options_);
}

}  // namespace bioqa::scoring
