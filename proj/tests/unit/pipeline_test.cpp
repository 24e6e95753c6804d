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

#include "bioqa/pipeline.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <mutex>

#include "bioqa/error.hpp"
#include "bioqa/mocksvc.hpp"
#include "test_support.hpp"

namespace bioqa::pipeline {
namespace {

constexpr std::string_view kSjogren =
    "Sjögren's syndrome. Sjögren's syndrome is an autoimmune disease that primarily affects "
    "moisture-producing glands.";
constexpr std::string_view kPid =
    "A common risk factor for both ectopic pregnancy and gastrointestinal diseases is pelvic "
    "inflammatory disease (PID).";
constexpr std::string_view kAmyloid =
    "Amyloid-β (Aβ) peptides are associated with Alzheimer's disease, but not with Familial "
    "British dementia. Instead, the primary aggregates are amyloid-related.";

// Replies from a fixed queue and records every call.
class ScriptedGenerator : public llm::Generator {
 public:
  explicit ScriptedGenerator(std::deque<std::string> replies) : replies_(std::move(replies)) {}

  llm::GenerationResponse Complete(std::string_view prompt,
                                   const llm::DecodingConfig& decoding) override {
    std::lock_guard lock(mu_);
    calls.emplace_back(std::string(prompt), decoding);
    if (replies_.empty()) throw TransportError("script exhausted");
    llm::GenerationResponse r;
    r.texts.push_back(replies_.front());
    replies_.pop_front();
    return r;
  }

  std::vector<std::pair<std::string, llm::DecodingConfig>> calls;

 private:
  std::mutex mu_;
  std::deque<std::string> replies_;
};

corpus::QAPair Question(std::string id, std::string q) {
  corpus::QAPair p;
  p.id = std::move(id);
  p.question = std::move(q);
  return p;
}

TEST(TemplateTest, RenderExact) {
  EXPECT_EQ(RenderPrompt(BuiltinTemplate(TemplateName::kPlain), "What causes PKU?"),
            "Question: What causes PKU? \n### Response##:");
  auto persona = RenderPrompt(BuiltinTemplate(TemplateName::kShortPersona), "Q?");
  EXPECT_EQ(persona.rfind("You are a specialized biomedical doctor trained to", 0), 0u);
  EXPECT_NE(persona.find("\n\nQuestion: Q? \n### Response##:"), std::string::npos);
  auto extract = RenderPrompt(BuiltinTemplate(TemplateName::kExtract), "R");
  EXPECT_EQ(extract,
            "Extract only the exact short answer phrase or entity from the following response. "
            "Output nothing else.\nResponse: R\n### Answer##:");
  // The slot value is inserted verbatim, braces included.
  EXPECT_EQ(RenderPrompt(BuiltinTemplate(TemplateName::kPlain), "{question}"),
            "Question: {question} \n### Response##:");
}

TEST(TemplateTest, MissingOrRepeatedPlaceholder) {
  EXPECT_THROW(RenderPrompt({TemplateName::kPlain, "no slot"}, "x"), TemplateError);
  EXPECT_THROW(RenderPrompt({TemplateName::kPlain, "{question}{question}"}, "x"), TemplateError);
}

TEST(ModeTest, TemplatesPerMode) {
  EXPECT_EQ(TemplateForMode(ParseMode("short_only")).name, TemplateName::kShortPersona);
  EXPECT_EQ(TemplateForMode(ParseMode("combined")).name, TemplateName::kPlain);
  EXPECT_EQ(TemplateForMode(ParseMode("long_only")).name, TemplateName::kPlain);
  EXPECT_THROW(ParseMode("ensemble"), ConfigError);
}

TEST(ValidityRuleTest, Predicate) {
  ValidityRule rule;
  EXPECT_TRUE(rule.IsValid("Chromosome 2"));
  EXPECT_FALSE(rule.IsValid(""));
  EXPECT_FALSE(rule.IsValid("   "));
  EXPECT_FALSE(rule.IsValid("one two three four five six seven eight nine"));
  EXPECT_TRUE(rule.IsValid("one two three four five six seven eight"));
  const std::string q = "Which chromosome carries the ALMS1 gene?";
  EXPECT_FALSE(rule.IsValid(q, q));
  EXPECT_FALSE(rule.IsValid("Is it chromosome 2?", q));
  EXPECT_FALSE(rule.IsValid("chromosome carries the ALMS1", q));
  EXPECT_TRUE(rule.IsValid("Chromosome 2", q));
  rule.require_nonempty = false;
  EXPECT_TRUE(rule.IsValid(""));
  rule.forbid_question_restate = false;
  EXPECT_TRUE(rule.IsValid(q, q));
}

TEST(HeuristicTest, VerboseOutputCases) {
  ValidityRule rule;
  EXPECT_EQ(HeuristicExtract(kSjogren, rule), "Sjögren's syndrome");
  EXPECT_EQ(HeuristicExtract(kPid, rule), "pelvic inflammatory disease");
  EXPECT_EQ(HeuristicExtract(kAmyloid, rule,
                             "What type of protein aggregates are associated with Familial British "
                             "dementia?"),
            std::nullopt);
}

TEST(HeuristicTest, LabelsAndLongSentences) {
  ValidityRule rule;
  EXPECT_EQ(HeuristicExtract("Answer: Cystic fibrosis.", rule), "Cystic fibrosis");
  std::string long_sentence;
  for (int i = 0; i < 40; ++i) long_sentence += "word" + std::to_string(i) + " ";
  EXPECT_EQ(HeuristicExtract(long_sentence, rule), std::nullopt);
  EXPECT_EQ(HeuristicExtract("", rule), std::nullopt);
}

TEST(PipelineConfigTest, DefaultsValidationAndJson) {
  PipelineConfig c;
  EXPECT_EQ(c.max_extract_attempts, 3);
  EXPECT_NO_THROW(c.Validate());
  nlohmann::json j = c;
  auto back = j.get<PipelineConfig>();
  EXPECT_EQ(back.mode, c.mode);
  EXPECT_EQ(back.stage1_decoding, c.stage1_decoding);
  EXPECT_EQ(back.validity, c.validity);
  c.max_extract_attempts = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.extract_decoding.n_samples = 2;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(PipelineConfigTest, AttemptDecoding) {
  PipelineConfig c;
  EXPECT_EQ(ExtractDecodingForAttempt(c, 1), c.extract_decoding);
  auto second = ExtractDecodingForAttempt(c, 2);
  EXPECT_EQ(second.temperature, 0.7);
  EXPECT_EQ(second.seed, 2u);
  EXPECT_EQ(ExtractDecodingForAttempt(c, 3).seed, 3u);
}

TEST(RunTwoStageTest, ShortCircuit) {
  ScriptedGenerator gen({"Chromosome 2"});
  auto r = RunTwoStage(gen, Question("q", "Which chromosome carries ALMS1?"), {});
  EXPECT_EQ(r.final_answer, "Chromosome 2");
  EXPECT_TRUE(r.attempts.empty());
  EXPECT_FALSE(r.used_fallback);
  EXPECT_EQ(r.answer_source, AnswerSource::kStage1);
  ASSERT_EQ(gen.calls.size(), 1u);
  EXPECT_EQ(gen.calls[0].first, "Question: Which chromosome carries ALMS1? \n### Response##:");
}

TEST(RunTwoStageTest, SecondAttemptWins) {
  ScriptedGenerator gen({std::string(kSjogren), "It is most likely the autoimmune disease Sjögren's syndrome overall.",
                         "Sjögren's syndrome"});
  auto r = RunTwoStage(gen, Question("q", "Which autoimmune disease causes dry eyes?"), {});
  EXPECT_EQ(r.attempts.size(), 2u);
  EXPECT_EQ(r.final_answer, "Sjögren's syndrome");
  EXPECT_EQ(r.answer_source, AnswerSource::kExtraction);
  ASSERT_EQ(gen.calls.size(), 3u);
  EXPECT_EQ(gen.calls[1].second.temperature, 0.01);
  EXPECT_EQ(gen.calls[2].second.temperature, 0.7);
  EXPECT_EQ(gen.calls[1].first, gen.calls[2].first);
}

TEST(RunTwoStageTest, HeuristicThenFallback) {
  const std::string invalid = "I cannot determine a single short answer from that response text.";
  {
    ScriptedGenerator gen({std::string(kPid), invalid, invalid, invalid});
    auto r = RunTwoStage(gen, Question("q", "What is a shared risk factor?"), {});
    EXPECT_EQ(r.attempts.size(), 3u);
    EXPECT_EQ(r.final_answer, "pelvic inflammatory disease");
    EXPECT_EQ(r.answer_source, AnswerSource::kHeuristic);
    EXPECT_FALSE(r.used_fallback);
  }
  {
    ScriptedGenerator gen({std::string(kAmyloid), invalid, invalid, invalid});
    auto r = RunTwoStage(
        gen,
        Question("q", "What type of protein aggregates are associated with Familial British "
                      "dementia?"),
        {});
    EXPECT_TRUE(r.used_fallback);
    EXPECT_EQ(r.final_answer, kAmyloid);
    EXPECT_EQ(r.answer_source, AnswerSource::kFallback);
  }
}

TEST(RunTwoStageTest, Stage2FailureFallsThrough) {
  ScriptedGenerator gen({std::string(kPid)});
  auto r = RunTwoStage(gen, Question("q", "What is a shared risk factor?"), {});
  ASSERT_TRUE(r.stage2_error.has_value());
  EXPECT_TRUE(r.attempts.empty());
  EXPECT_EQ(r.final_answer, "pelvic inflammatory disease");
}

TEST(RunTwoStageTest, Stage1FailureCarriesQuestionId) {
  ScriptedGenerator gen({});
  try {
    RunTwoStage(gen, Question("bioasq:7", "What is it?"), {});
    FAIL();
  } catch (const QuestionError& e) {
    EXPECT_EQ(e.question_id(), "bioasq:7");
  }
}

TEST(RunBatchTest, OrderIsolationCheckpointAndCache) {
  mocksvc::Transcript t;
  std::vector<corpus::QAPair> qs;
  for (int i = 0; i < 5; ++i) {
    auto q = Question("q" + std::to_string(i), "Which answer is number " + std::to_string(i) + "?");
    if (i != 3) {
      t.entries.push_back({RenderPrompt(BuiltinTemplate(TemplateName::kPlain), q.question),
                           std::nullopt, {"Answer " + std::to_string(i)}, 200, {}});
    }
    qs.push_back(q);
  }
  // q3 is unscripted -> 404.
  mocksvc::MockServer server(t);
  server.Start();
  testing::TempDir dir;
  llm::ModelEndpoint e;
  e.base_url = server.base_url();
  llm::ClientOptions o;
  o.cache_dir = dir / "cache";
  o.sleep = [](std::chrono::milliseconds) {};

  BatchOptions b;
  b.max_in_flight = 3;
  b.checkpoint = dir / "ckpt";
  std::size_t progress_calls = 0;
  b.progress = [&](std::size_t, std::size_t) { ++progress_calls; };
  std::vector<BatchRecord> first;
  {
    llm::Client client(e, o);
    first = RunBatch(client, qs, {}, b);
  }
  ASSERT_EQ(first.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(first[i].question_id, "q" + std::to_string(i));
  EXPECT_FALSE(first[3].result.has_value());
  EXPECT_TRUE(first[3].error.has_value());
  EXPECT_EQ(first[4].result->final_answer, "Answer 4");
  EXPECT_EQ(progress_calls, 5u);
  auto ckpt = testing::ReadAll(dir / "ckpt");
  // Failed questions stay out of the checkpoint so a rerun retries them.
  EXPECT_EQ(std::count(ckpt.begin(), ckpt.end(), '\n'), 4);
  EXPECT_EQ(ckpt.find("q3\n"), std::string::npos);

  const auto before = server.request_count();
  llm::Client warm(e, o);
  auto second = RunBatch(warm, qs, {}, b);
  EXPECT_EQ(second, first);
  // Only the failed question goes back to the endpoint.
  EXPECT_EQ(server.request_count() - before, 1u);
  EXPECT_EQ(warm.stats().cache_hits, 4);

  WriteResults(dir / "r.jsonl", first);
  EXPECT_EQ(ReadResults(dir / "r.jsonl"), first);
}

TEST(ResultJsonTest, RoundTrip) {
  PipelineResult r;
  r.question_id = "x";
  r.stage1_text = "s";
  r.attempts = {"a", "b"};
  r.final_answer = "b";
  r.answer_source = AnswerSource::kExtraction;
  r.stage2_error = "boom";
  nlohmann::json j = r;
  EXPECT_EQ(j.get<PipelineResult>(), r);
  EXPECT_EQ(j["answer_source"], "extraction");
  BatchRecord err{"y", std::nullopt, "failed"};
  nlohmann::json ej = err;
  EXPECT_EQ(ej.get<BatchRecord>(), err);
}

}  // namespace
}  // namespace bioqa::pipeline
