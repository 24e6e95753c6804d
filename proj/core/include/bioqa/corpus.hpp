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

#ifndef BIOQA_CORPUS_HPP_
#define BIOQA_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bioqa::corpus {

enum class Source {
  kMedquad,
  kQald,
  kMashqa,
  kMediqa,
  kWikimed,
  kBiqa,
  kBioasq,
  kTrec,
  kDevset,
  kOther,
};

enum class Split { kTrain, kValidation, kTest };

std::string_view ToString(Source source);
std::string_view ToString(Split split);
// Throw ConfigError on unknown tags.
Source ParseSource(std::string_view tag);
Split ParseSplit(std::string_view tag);

struct QAPair {
  std::string id;
  std::string question;
  std::string short_answer;
  std::optional<std::string> long_answer;
  Source source = Source::kOther;
  Split split = Split::kTrain;

  bool operator==(const QAPair&) const = default;
};

void to_json(nlohmann::json& j, const QAPair& p);
// Throws DecodeError when required fields are missing or mistyped.
void from_json(const nlohmann::json& j, QAPair& p);

enum class InputFormat { kJsonl, kCsv };

struct SourceManifest {
  Source source = Source::kOther;
  std::filesystem::path path;
  std::optional<long long> expected_count;
  Split split = Split::kTrain;
  // Inferred from the file extension when unset.
  std::optional<InputFormat> format;
};

// Field names a source's native schema uses, in lookup priority order.
struct SourceAdapter {
  std::vector<std::string> id_keys;
  std::vector<std::string> question_keys;
  std::vector<std::string> short_answer_keys;
  std::vector<std::string> long_answer_keys;
};

const SourceAdapter& AdapterFor(Source source);

struct IngestResult {
  std::vector<QAPair> pairs;
  std::size_t skipped = 0;
  // Reasons for the first few skipped rows, for diagnostics.
  std::vector<std::string> skip_reasons;
};

// Streams one source file through its adapter. Malformed rows are counted
// and skipped. Throws IoError if the file is missing and ManifestViolation
// if expected_count is set and differs from the number ingested.
IngestResult IngestSource(const SourceManifest& manifest);

// Parses RFC 4180 CSV. Rows with an unterminated quote are reported as
// std::nullopt so callers can count them.
std::vector<std::optional<std::vector<std::string>>> ParseCsv(std::string_view content);

struct FilterPolicy {
  int min_question_tokens = 3;
  int min_answer_chars = 1;
  bool strip_markup = true;
  // Plain strings are literal substrings; a "re:" prefix marks an
  // ECMAScript regex. Matched against question and short answer.
  std::vector<std::string> reject_patterns;

  bool operator==(const FilterPolicy&) const = default;
};

void to_json(nlohmann::json& j, const FilterPolicy& p);
void from_json(const nlohmann::json& j, FilterPolicy& p);

// A validated FilterPolicy with its regexes compiled. Construction is the
// single point where configuration errors surface.
class CompiledFilter {
 public:
  explicit CompiledFilter(FilterPolicy policy);
  ~CompiledFilter();
  CompiledFilter(CompiledFilter&&) noexcept;
  CompiledFilter& operator=(CompiledFilter&&) noexcept;

  const FilterPolicy& policy() const { return policy_; }

  // Returns the cleaned pair, or nullopt if the policy drops it.
  std::optional<QAPair> Apply(QAPair pair) const;

 private:
  struct Patterns;
  FilterPolicy policy_;
  std::unique_ptr<Patterns> patterns_;
};

struct FilterResult {
  std::vector<QAPair> kept;
  std::size_t dropped_count = 0;
};

FilterResult CleanFilter(std::vector<QAPair> pairs, const CompiledFilter& filter);
FilterResult CleanFilter(std::vector<QAPair> pairs, const FilterPolicy& policy);

// Drops pairs whose normalized question was already seen; first wins.
std::vector<QAPair> Dedupe(const std::vector<QAPair>& pairs);

struct SplitResult {
  std::vector<QAPair> train;
  std::vector<QAPair> validation;
};

// Seeded partition; both halves keep input order. Throws ConfigError unless
// 0 < train_fraction < 1.
SplitResult SplitPairs(const std::vector<QAPair>& pairs, double train_fraction,
                       std::uint64_t seed);

std::vector<QAPair> ReadCorpus(const std::filesystem::path& path);
void WriteCorpus(const std::filesystem::path& path, const std::vector<QAPair>& pairs);
std::string ToJsonLine(const QAPair& pair);

// Full ETL input: a list of sources plus the cleaning policy.
struct CorpusManifest {
  std::vector<SourceManifest> sources;
  FilterPolicy filter;
  bool dedupe = true;
};

// Relative source paths resolve against the manifest's directory.
CorpusManifest LoadCorpusManifest(const std::filesystem::path& path);
CorpusManifest ParseCorpusManifest(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);

struct SourceStats {
  std::size_t ingested = 0;
  std::size_t skipped = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t duplicates = 0;
};

struct BuildResult {
  std::vector<QAPair> corpus;
  // Keyed by source tag; a tag that appears in several manifests is summed.
  std::map<std::string, SourceStats> stats;
};

// ingest (sources in parallel) -> clean_filter -> dedupe, in manifest order.
BuildResult BuildCorpus(const CorpusManifest& manifest);

nlohmann::json StatsToJson(const std::map<std::string, SourceStats>& stats);

}  // namespace bioqa::corpus

#endif  // BIOQA_CORPUS_HPP_
