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

#ifndef BIOQA_SCORING_HPP_
#define BIOQA_SCORING_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace bioqa::scoring {

inline constexpr double kDefaultConceptThreshold = 0.6;

// Knobs of the normalization pipeline exposed through the run config.
struct NormalizeOptions {
  // Decompose and drop combining marks ("Sjögren" -> "sjogren"). Greek and
  // other non-Latin letters are never transliterated.
  bool fold_diacritics = true;

  bool operator==(const NormalizeOptions&) const = default;
};

// Answer text after normalization: compatibility folding, lowercasing,
// punctuation removal (dashes become spaces), article removal and whitespace
// collapse. Only NormalizeAnswer() and SynonymTable can produce one.
class NormalizedAnswer {
 public:
  NormalizedAnswer() = default;

  const std::string& text() const { return text_; }
  bool empty() const { return text_.empty(); }
  std::vector<std::string_view> tokens() const;

  friend bool operator==(const NormalizedAnswer&, const NormalizedAnswer&) = default;

 private:
  explicit NormalizedAnswer(std::string text) : text_(std::move(text)) {}

  friend NormalizedAnswer NormalizeAnswer(std::string_view, const NormalizeOptions&);
  friend class SynonymTable;
  friend NormalizedAnswer ResolveSynonyms(const NormalizedAnswer&, const class SynonymTable&);

  std::string text_;
};

NormalizedAnswer NormalizeAnswer(std::string_view raw,
                                 const NormalizeOptions& options = {});

// Whole-string alias -> canonical mapping. Keys and values are stored
// normalized; no alias maps to itself and no canonical form is also an alias.
class SynonymTable {
 public:
  SynonymTable() = default;

  // Throws ConfigError on self-maps, cycles or conflicting duplicates.
  static SynonymTable FromPairs(
      const std::vector<std::pair<std::string, std::string>>& pairs,
      const NormalizeOptions& options = {});

  // Two-column TSV, alias<TAB>canonical, '#' starts a comment line.
  static SynonymTable ParseTsv(std::string_view content,
                               std::string_view origin = "<memory>",
                               const NormalizeOptions& options = {});
  static SynonymTable LoadTsv(const std::filesystem::path& path,
                              const NormalizeOptions& options = {});

  // chr N / chrN / N chromosome -> chromosome N for N in 1..22, X, Y.
  static SynonymTable DefaultChromosomeAliases();

  std::optional<std::string_view> Lookup(const NormalizedAnswer& answer) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Stable digest of the entries, recorded in reports.
  std::string Digest() const;

  // Serializes in the TSV format accepted by ParseTsv.
  std::string ToTsv() const;

 private:
  std::map<std::string, std::string> entries_;
};

NormalizedAnswer ResolveSynonyms(const NormalizedAnswer& answer,
                                 const SynonymTable& table);

bool ExactMatch(std::string_view prediction, std::string_view gold,
                const SynonymTable& table, const NormalizeOptions& options = {});

// Multiset token-overlap F1. 1.0 when both sides are empty, 0.0 when exactly
// one is.
double TokenF1(const NormalizedAnswer& prediction, const NormalizedAnswer& gold);
double TokenF1(std::string_view prediction, std::string_view gold,
               const NormalizeOptions& options = {});

// Verdicts for one prediction/gold pair. Construction enforces
// em => concept and em => token_f1 == 1.
class MatchResult {
 public:
  MatchResult(bool em, bool concept_match, double token_f1);

  bool em() const { return em_; }
  bool concept_match() const { return concept_; }
  double token_f1() const { return token_f1_; }

  friend bool operator==(const MatchResult&, const MatchResult&) = default;

 private:
  bool em_;
  bool concept_;
  double token_f1_;
};

// concept = em || token_f1 >= threshold, where token_f1 is taken over the
// synonym-resolved forms. Throws ConfigError unless 0 < threshold <= 1.
MatchResult ConceptMatch(std::string_view prediction, std::string_view gold,
                         const SynonymTable& table,
                         double threshold = kDefaultConceptThreshold,
                         const NormalizeOptions& options = {});

void ValidateThreshold(double threshold);

// Everything needed to reproduce a score: echoed into reports.
struct ScorerConfig {
  double concept_threshold = kDefaultConceptThreshold;
  NormalizeOptions normalize;
  // "default", "none", or a TSV path.
  std::string synonyms = "default";
};

void to_json(nlohmann::json& j, const ScorerConfig& c);
void from_json(const nlohmann::json& j, ScorerConfig& c);

// Resolves ScorerConfig::synonyms into a table.
SynonymTable LoadSynonyms(const ScorerConfig& config);

// Pre-bound table, threshold and options.
class Scorer {
 public:
  Scorer(SynonymTable table, double threshold = kDefaultConceptThreshold,
         NormalizeOptions options = {});

  MatchResult Match(std::string_view prediction, std::string_view gold) const;

  const SynonymTable& table() const { return table_; }
  double threshold() const { return threshold_; }
  const NormalizeOptions& options() const { return options_; }

 private:
  SynonymTable table_;
  double threshold_;
  NormalizeOptions options_;
};

}  // namespace bioqa::scoring

#endif  // BIOQA_SCORING_HPP_
