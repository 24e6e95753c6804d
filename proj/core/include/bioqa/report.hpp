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

#ifndef BIOQA_REPORT_HPP_
#define BIOQA_REPORT_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bioqa/corpus.hpp"
#include "bioqa/pipeline.hpp"
#include "bioqa/scoring.hpp"

namespace bioqa::report {

struct SourceScore {
  std::size_t n = 0;
  double em = 0.0;
  double concept_rate = 0.0;

  bool operator==(const SourceScore&) const = default;
};

struct ScoreSummary {
  std::size_t n = 0;
  double em_micro = 0.0;
  // Proxy for the organizers' concept-level metric: EM after synonym
  // resolution, or token-F1 at or above the configured threshold.
  double concept_micro = 0.0;
  double fallback_rate = 0.0;
  std::size_t error_count = 0;
  std::map<std::string, SourceScore> per_source;
  // Result ids with no gold pair, and gold ids with no result.
  std::vector<std::string> unmatched_ids;
  std::vector<std::string> missing_ids;
  nlohmann::json config_echo = nlohmann::json::object();

  bool operator==(const ScoreSummary&) const = default;
};

struct AggregateOptions {
  scoring::ScorerConfig scorer;
  // Largest tolerated fraction of ids present on only one side.
  double id_mismatch_tolerance = 0.0;
  // Extra settings to record verbatim under config_echo.run.
  nlohmann::json run_echo;
};

// Scores aligned results against gold. Error records count as empty
// predictions. Throws EvaluationError when nothing aligns, ids repeat, or
// the mismatch rate exceeds the tolerance.
ScoreSummary Aggregate(const std::vector<pipeline::BatchRecord>& results,
                       const std::vector<corpus::QAPair>& gold, const AggregateOptions& options);
ScoreSummary Aggregate(const std::vector<pipeline::PipelineResult>& results,
                       const std::vector<corpus::QAPair>& gold, const AggregateOptions& options);

nlohmann::json SummaryToJson(const ScoreSummary& summary);
ScoreSummary SummaryFromJson(const nlohmann::json& j);

// Recovers the options recorded by Aggregate, for rescoring.
AggregateOptions OptionsFromEcho(const nlohmann::json& config_echo);

void EmitReport(const ScoreSummary& summary, const std::filesystem::path& path);
ScoreSummary ReadReport(const std::filesystem::path& path);

// Writes `id<TAB>answer` rows sorted by id under a header. Tabs and line
// breaks inside answers become single spaces; one warning per rewrite.
std::vector<std::string> EmitSubmission(const std::vector<pipeline::BatchRecord>& results,
                                        const std::filesystem::path& path);
std::string RenderSubmission(const std::vector<pipeline::BatchRecord>& results,
                             std::vector<std::string>* warnings = nullptr);

}  // namespace bioqa::report

#endif  // BIOQA_REPORT_HPP_
