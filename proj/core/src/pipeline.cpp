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

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "bioqa/scoring.hpp"
#include "bioqa/text.hpp"

namespace bioqa::pipeline {
namespace {

using nlohmann::json;

constexpr std::string_view kQuestionSlot = "{question}";
constexpr std::string_view kResponseSlot = "{response}";

const PromptTemplate kPlain{
    TemplateName::kPlain,
    "Question: {question} \n"
    "### Response##:"};

const PromptTemplate kShortPersona{
    TemplateName::kShortPersona,
    "You are a specialized biomedical doctor trained to answer clinical and biomedical "
    "questions. \n"
    "Your task is to generate a concise short answer that preserves\n"
    "the full name of the entity in question.\n"
    "\n"
    "Question: {question} \n"
    "### Response##:"};

const PromptTemplate kExtract{
    TemplateName::kExtract,
    "Extract only the exact short answer phrase or entity from the following response. "
    "Output nothing else.\n"
    "Response: {response}\n"
    "### Answer##:"};

constexpr std::pair<Mode, std::string_view> kModeTags[] = {
    {Mode::kCombined, "combined"},
    {Mode::kShortOnly, "short_only"},
    {Mode::kLongOnly, "long_only"},
};

constexpr std::pair<AnswerSource, std::string_view> kAnswerSourceTags[] = {
    {AnswerSource::kStage1, "stage1"},
    {AnswerSource::kExtraction, "extraction"},
    {AnswerSource::kHeuristic, "heuristic"},
    {AnswerSource::kFallback, "fallback"},
};

AnswerSource ParseAnswerSource(std::string_view tag) {
  for (const auto& [s, name] : kAnswerSourceTags) {
    if (name == tag) return s;
  }
  throw DecodeError("unknown answer_source '" + std::string(tag) + "'");
}

bool SharesTrigram(const std::vector<std::string_view>& candidate,
                   const std::vector<std::string_view>& question) {
  if (candidate.size() < 3 || question.size() < 3) return false;
  std::unordered_set<std::string> grams;
  for (std::size_t i = 0; i + 2 < question.size(); ++i) {
    grams.insert(std::string(question[i]) + ' ' + std::string(question[i + 1]) + ' ' +
                 std::string(question[i + 2]));
  }
  for (std::size_t i = 0; i + 2 < candidate.size(); ++i) {
    if (grams.count(std::string(candidate[i]) + ' ' + std::string(candidate[i + 1]) + ' ' +
                    std::string(candidate[i + 2])) > 0) {
      return true;
    }
  }
  return false;
}

bool IEquals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && text::ToLowerAscii(a) == text::ToLowerAscii(b);
}

std::string_view StripAnswerLabel(std::string_view s) {
  static constexpr std::string_view kLabels[] = {"final answer:", "short answer:", "answer:",
                                                 "response:"};
  for (auto label : kLabels) {
    if (s.size() >= label.size() && IEquals(s.substr(0, label.size()), label)) {
      return text::Trim(s.substr(label.size()));
    }
  }
  return s;
}

std::string_view FirstSentence(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\n') return s.substr(0, i);
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == s.size() || text::IsSpace(s[i + 1]))) {
      // Keep '?' so the validity rule can see a restated question.
      return s.substr(0, c == '?' ? i + 1 : i);
    }
  }
  return s;
}

std::string StripParentheticals(std::string_view s) {
  std::string out;
  int depth = 0;
  for (char c : s) {
    if (c == '(' || c == '[') {
      ++depth;
    } else if ((c == ')' || c == ']') && depth > 0) {
      --depth;
    } else if (depth == 0) {
      out.push_back(c);
    }
  }
  // Unbalanced opener: keep the original text.
  if (depth > 0) out.assign(s);
  return out;
}

std::string Tidy(std::string_view s) {
  std::string out = text::CollapseWhitespace(s);
  // Spaces left before punctuation by removed parentheticals.
  for (std::string_view p : {" ,", " ;", " :", " ."}) {
    for (auto pos = out.find(p); pos != std::string::npos; pos = out.find(p)) out.erase(pos, 1);
  }
  while (!out.empty() && std::string_view(" .,;:!").find(out.back()) != std::string_view::npos) {
    out.pop_back();
  }
  static constexpr std::string_view kQuotes = "\"*`";
  while (out.size() >= 2 && kQuotes.find(out.front()) != std::string_view::npos &&
         out.back() == out.front()) {
    out = out.substr(1, out.size() - 2);
  }
  return std::string(text::Trim(out));
}

std::optional<std::string> AfterCopula(std::string_view s) {
  static constexpr std::string_view kCopulas[] = {" is ", " are ", " was ", " were "};
  std::size_t best = std::string_view::npos;
  std::size_t len = 0;
  for (auto c : kCopulas) {
    auto pos = s.find(c);
    if (pos != std::string_view::npos && pos < best) {
      best = pos;
      len = c.size();
    }
  }
  if (best == std::string_view::npos) return std::nullopt;
  return Tidy(s.substr(best + len));
}

}  // namespace

std::string_view PromptTemplate::placeholder() const {
  return name == TemplateName::kExtract ? kResponseSlot : kQuestionSlot;
}

const PromptTemplate& BuiltinTemplate(TemplateName name) {
  switch (name) {
    case TemplateName::kPlain: return kPlain;
    case TemplateName::kShortPersona: return kShortPersona;
    case TemplateName::kExtract: return kExtract;
  }
  return kPlain;
}

std::string RenderPrompt(const PromptTemplate& tmpl, std::string_view slot_value) {
  auto slot = tmpl.placeholder();
  auto pos = tmpl.body.find(slot);
  if (pos == std::string::npos) {
    throw TemplateError("template has no " + std::string(slot) + " placeholder");
  }
  if (tmpl.body.find(slot, pos + slot.size()) != std::string::npos) {
    throw TemplateError("template has more than one " + std::string(slot) + " placeholder");
  }
  std::string out;
  out.reserve(tmpl.body.size() + slot_value.size());
  out.append(tmpl.body, 0, pos);
  out.append(slot_value);
  out.append(tmpl.body, pos + slot.size());
  return out;
}

std::string_view ToString(Mode mode) {
  for (const auto& [m, tag] : kModeTags) {
    if (m == mode) return tag;
  }
  return "combined";
}

Mode ParseMode(std::string_view tag) {
  for (const auto& [m, name] : kModeTags) {
    if (name == tag) return m;
  }
  throw ConfigError("unknown mode '" + std::string(tag) +
                    "' (expected combined, short_only or long_only)");
}

const PromptTemplate& TemplateForMode(Mode mode) {
  return mode == Mode::kShortOnly ? kShortPersona : kPlain;
}

bool ValidityRule::IsValid(std::string_view candidate, std::string_view question) const {
  auto trimmed = text::Trim(candidate);
  if (trimmed.empty()) return !require_nonempty;
  if (text::CountWords(trimmed) > static_cast<std::size_t>(max_words)) return false;
  if (forbid_question_restate && !text::Trim(question).empty()) {
    if (trimmed.back() == '?') return false;
    auto cand = scoring::NormalizeAnswer(trimmed);
    auto q = scoring::NormalizeAnswer(question);
    if (!cand.empty() && cand == q) return false;
    if (SharesTrigram(cand.tokens(), q.tokens())) return false;
  }
  return true;
}

void to_json(json& j, const ValidityRule& r) {
  j = json{{"max_words", r.max_words},
           {"forbid_question_restate", r.forbid_question_restate},
           {"require_nonempty", r.require_nonempty}};
}

void from_json(const json& j, ValidityRule& r) {
  ValidityRule d;
  try {
    r.max_words = j.value("max_words", d.max_words);
    r.forbid_question_restate = j.value("forbid_question_restate", d.forbid_question_restate);
    r.require_nonempty = j.value("require_nonempty", d.require_nonempty);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid validity rule: ") + e.what());
  }
  if (r.max_words < 1) throw ConfigError("validity.max_words must be positive");
}

void PipelineConfig::Validate() const {
  if (max_extract_attempts < 1) throw ConfigError("max_extract_attempts must be positive");
  if (validity.max_words < 1) throw ConfigError("validity.max_words must be positive");
  stage1_decoding.Validate();
  extract_decoding.Validate();
  if (extract_decoding.n_samples != 1) {
    throw ConfigError("extract_decoding.n_samples must be 1 (attempts are sequential)");
  }
  llm::DecodingConfig retry = extract_decoding;
  retry.temperature = retry_temperature;
  retry.Validate();
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"mode", ToString(c.mode)},
           {"stage1_decoding", c.stage1_decoding},
           {"max_extract_attempts", c.max_extract_attempts},
           {"extract_decoding", c.extract_decoding},
           {"retry_temperature", c.retry_temperature},
           {"validity", c.validity},
           {"heuristic_guard", c.heuristic_guard}};
}

void from_json(const json& j, PipelineConfig& c) {
  PipelineConfig d;
  try {
    c.mode = ParseMode(j.value("mode", std::string(ToString(d.mode))));
    c.stage1_decoding = j.value("stage1_decoding", d.stage1_decoding);
    c.max_extract_attempts = j.value("max_extract_attempts", d.max_extract_attempts);
    c.extract_decoding = j.value("extract_decoding", d.extract_decoding);
    c.retry_temperature = j.value("retry_temperature", d.retry_temperature);
    c.validity = j.value("validity", d.validity);
    c.heuristic_guard = j.value("heuristic_guard", d.heuristic_guard);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
  c.Validate();
}

llm::DecodingConfig ExtractDecodingForAttempt(const PipelineConfig& config, int attempt) {
  llm::DecodingConfig d = config.extract_decoding;
  d.n_samples = 1;
  if (attempt > 1) {
    d.temperature = config.retry_temperature;
    d.seed = config.extract_decoding.seed.value_or(0) + static_cast<std::uint64_t>(attempt);
  }
  return d;
}

std::string_view ToString(AnswerSource source) {
  for (const auto& [s, tag] : kAnswerSourceTags) {
    if (s == source) return tag;
  }
  return "fallback";
}

void to_json(json& j, const PipelineResult& r) {
  j = json{{"question_id", r.question_id},
           {"stage1_text", r.stage1_text},
           {"attempts", r.attempts},
           {"final_answer", r.final_answer},
           {"used_fallback", r.used_fallback},
           {"answer_source", ToString(r.answer_source)}};
  j["stage2_error"] = r.stage2_error ? json(*r.stage2_error) : json(nullptr);
}

void from_json(const json& j, PipelineResult& r) {
  try {
    r.question_id = j.at("question_id").get<std::string>();
    r.stage1_text = j.at("stage1_text").get<std::string>();
    r.attempts = j.at("attempts").get<std::vector<std::string>>();
    r.final_answer = j.at("final_answer").get<std::string>();
    r.used_fallback = j.at("used_fallback").get<bool>();
    r.answer_source = ParseAnswerSource(j.value(
        "answer_source", std::string(r.used_fallback ? "fallback" : "extraction")));
    auto err = j.find("stage2_error");
    r.stage2_error = (err == j.end() || err->is_null())
                         ? std::nullopt
                         : std::optional<std::string>(err->get<std::string>());
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed pipeline result: ") + e.what());
  }
}

std::optional<std::string> HeuristicExtract(std::string_view long_text, const ValidityRule& rule,
                                            std::string_view question) {
  std::string_view body = StripAnswerLabel(text::Trim(long_text));
  std::string sentence = Tidy(StripParentheticals(FirstSentence(body)));
  if (!sentence.empty() && rule.IsValid(sentence, question)) return sentence;
  if (auto tail = AfterCopula(sentence); tail && !tail->empty() && rule.IsValid(*tail, question)) {
    return tail;
  }
  return std::nullopt;
}

QuestionError::QuestionError(std::string question_id, const std::string& message)
    : Error("question " + question_id + ": " + message), question_id_(std::move(question_id)) {}

PipelineResult RunTwoStage(llm::Generator& generator, const corpus::QAPair& question,
                           const PipelineConfig& config) {
  PipelineResult r;
  r.question_id = question.id;

  try {
    auto prompt = RenderPrompt(TemplateForMode(config.mode), question.question);
    auto response = generator.Complete(prompt, config.stage1_decoding);
    r.stage1_text = response.texts.empty() ? std::string()
                                           : std::string(text::Trim(response.texts.front()));
  } catch (const QuestionError&) {
    throw;
  } catch (const std::exception& e) {
    throw QuestionError(question.id, e.what());
  }

  const auto& rule = config.validity;
  if (rule.IsValid(r.stage1_text, question.question)) {
    r.final_answer = r.stage1_text;
    r.answer_source = AnswerSource::kStage1;
    return r;
  }

  if (!r.stage1_text.empty()) {
    const auto extract_prompt = RenderPrompt(BuiltinTemplate(TemplateName::kExtract), r.stage1_text);
    for (int attempt = 1; attempt <= config.max_extract_attempts; ++attempt) {
      std::string candidate;
      try {
        auto response =
            generator.Complete(extract_prompt, ExtractDecodingForAttempt(config, attempt));
        candidate = response.texts.empty() ? std::string()
                                           : std::string(text::Trim(response.texts.front()));
      } catch (const std::exception& e) {
        r.stage2_error = e.what();
        break;
      }
      r.attempts.push_back(candidate);
      if (rule.IsValid(candidate, question.question)) {
        r.final_answer = candidate;
        r.answer_source = AnswerSource::kExtraction;
        return r;
      }
    }
    if (config.heuristic_guard) {
      if (auto h = HeuristicExtract(r.stage1_text, rule, question.question)) {
        r.final_answer = *h;
        r.answer_source = AnswerSource::kHeuristic;
        return r;
      }
    }
  }

  r.final_answer = r.stage1_text;
  r.used_fallback = true;
  r.answer_source = AnswerSource::kFallback;
  return r;
}

void to_json(json& j, const BatchRecord& r) {
  if (r.result) {
    j = *r.result;
  } else {
    j = json{{"question_id", r.question_id}, {"error", r.error.value_or("unknown error")}};
  }
}

void from_json(const json& j, BatchRecord& r) {
  try {
    r.question_id = j.at("question_id").get<std::string>();
  } catch (const json::exception& e) {
    throw DecodeError(std::string("result record lacks question_id: ") + e.what());
  }
  if (j.contains("error") && !j["error"].is_null()) {
    r.result.reset();
    r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
  } else {
    r.result = j.get<PipelineResult>();
    r.error.reset();
  }
}

std::vector<BatchRecord> RunBatch(llm::Generator& generator,
                                  const std::vector<corpus::QAPair>& questions,
                                  const PipelineConfig& config, const BatchOptions& options) {
  config.Validate();
  std::vector<BatchRecord> records(questions.size());
  if (questions.empty()) return records;

  std::ofstream checkpoint;
  if (options.checkpoint) {
    checkpoint.open(*options.checkpoint, std::ios::binary | std::ios::app);
    if (!checkpoint) throw IoError("cannot open checkpoint " + options.checkpoint->string());
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < questions.size(); i = next.fetch_add(1)) {
      const auto& q = questions[i];
      BatchRecord& rec = records[i];
      rec.question_id = q.id;
      try {
        rec.result = RunTwoStage(generator, q, config);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      std::lock_guard<std::mutex> lock(progress_mu);
      if (checkpoint.is_open() && rec.result) {
        checkpoint << q.id << '\n';
        checkpoint.flush();
      }
      std::size_t n = done.fetch_add(1) + 1;
      if (options.progress) options.progress(n, questions.size());
    }
  };

  std::size_t workers = std::min<std::size_t>(
      questions.size(), static_cast<std::size_t>(std::max(1, options.max_in_flight)));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return records;
}

void WriteResults(const std::filesystem::path& path, const std::vector<BatchRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << json(r).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<BatchRecord> ReadResults(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<BatchRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::Trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DecodeError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    try {
      out.push_back(j.get<BatchRecord>());
    } catch (const DecodeError& e) {
      throw DecodeError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace bioqa::pipeline
