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

#ifndef BIOQA_PIPELINE_HPP_
#define BIOQA_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bioqa/corpus.hpp"
#include "bioqa/error.hpp"
#include "bioqa/llm_client.hpp"

namespace bioqa::pipeline {

enum class TemplateName { kPlain, kShortPersona, kExtract };

struct PromptTemplate {
  TemplateName name;
  std::string body;

  // "{question}" or "{response}".
  std::string_view placeholder() const;
};

// The built-in templates, stored byte-for-byte.
const PromptTemplate& BuiltinTemplate(TemplateName name);

// Replaces the single placeholder with slot_value verbatim. Throws
// TemplateError when the placeholder is missing or appears more than once.
std::string RenderPrompt(const PromptTemplate& tmpl, std::string_view slot_value);

// The three fine-tuning setups; each has its own stage-1 template.
enum class Mode { kCombined, kShortOnly, kLongOnly };

std::string_view ToString(Mode mode);
Mode ParseMode(std::string_view tag);  // throws ConfigError
const PromptTemplate& TemplateForMode(Mode mode);

// What counts as an acceptable short answer.
struct ValidityRule {
  int max_words = 8;
  bool forbid_question_restate = true;
  bool require_nonempty = true;

  // Pure predicate. The restatement check only applies when a question is
  // supplied: the candidate may not equal the question, end in '?', or share
  // a run of three normalized tokens with it.
  bool IsValid(std::string_view candidate, std::string_view question = {}) const;

  bool operator==(const ValidityRule&) const = default;
};

void to_json(nlohmann::json& j, const ValidityRule& r);
void from_json(const nlohmann::json& j, ValidityRule& r);

inline constexpr int kDefaultExtractAttempts = 3;
inline constexpr double kDefaultRetryTemperature = 0.7;

struct PipelineConfig {
  Mode mode = Mode::kCombined;
  llm::DecodingConfig stage1_decoding;
  int max_extract_attempts = kDefaultExtractAttempts;
  // Attempt 1 uses this as-is. Later attempts resample at retry_temperature
  // with seed = (extract_decoding.seed or 0) + attempt number.
  llm::DecodingConfig extract_decoding;
  double retry_temperature = kDefaultRetryTemperature;
  ValidityRule validity;
  // Run HeuristicExtract on the stage-1 text before falling back to it.
  bool heuristic_guard = true;

  void Validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

// Decoding used for stage-2 attempt `attempt` (1-based).
llm::DecodingConfig ExtractDecodingForAttempt(const PipelineConfig& config, int attempt);

// Where the final answer came from.
enum class AnswerSource { kStage1, kExtraction, kHeuristic, kFallback };

std::string_view ToString(AnswerSource source);

struct PipelineResult {
  std::string question_id;
  std::string stage1_text;
  std::vector<std::string> attempts;
  std::string final_answer;
  bool used_fallback = false;
  AnswerSource answer_source = AnswerSource::kFallback;
  // Set when a stage-2 request failed; the question still gets an answer.
  std::optional<std::string> stage2_error;

  bool operator==(const PipelineResult&) const = default;
};

void to_json(nlohmann::json& j, const PipelineResult& r);
void from_json(const nlohmann::json& j, PipelineResult& r);

// Deterministic offline extraction: first sentence, parentheticals removed,
// then the predicate after a leading copula clause ("... is X"). Returns the
// candidate only if it passes `rule`.
std::optional<std::string> HeuristicExtract(std::string_view long_text, const ValidityRule& rule,
                                            std::string_view question = {});

// An error tied to one question.
class QuestionError : public Error {
 public:
  QuestionError(std::string question_id, const std::string& message);
  const std::string& question_id() const { return question_id_; }

 private:
  std::string question_id_;
};

// Stage-1 errors propagate as QuestionError; stage-2 errors are recorded in
// the result and the question proceeds to the heuristic and fallback.
PipelineResult RunTwoStage(llm::Generator& generator, const corpus::QAPair& question,
                           const PipelineConfig& config);

// One line of the results file: a result or an error for one question.
struct BatchRecord {
  std::string question_id;
  std::optional<PipelineResult> result;
  std::optional<std::string> error;

  bool operator==(const BatchRecord&) const = default;
};

void to_json(nlohmann::json& j, const BatchRecord& r);
void from_json(const nlohmann::json& j, BatchRecord& r);

struct BatchOptions {
  int max_in_flight = 4;
  // Completed question ids are appended here, one per line.
  std::optional<std::filesystem::path> checkpoint;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Output order matches input order. Per-question failures become error
// records; nothing below the batch level is fatal.
std::vector<BatchRecord> RunBatch(llm::Generator& generator,
                                  const std::vector<corpus::QAPair>& questions,
                                  const PipelineConfig& config, const BatchOptions& options = {});

void WriteResults(const std::filesystem::path& path, const std::vector<BatchRecord>& records);
std::vector<BatchRecord> ReadResults(const std::filesystem::path& path);

}  // namespace bioqa::pipeline

#endif  // BIOQA_PIPELINE_HPP_
