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

#include "bioqa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "bioqa/error.hpp"
#include "bioqa/scoring.hpp"
#include "bioqa/text.hpp"

namespace bioqa::corpus {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxSkipReasons = 16;

constexpr std::pair<Source, std::string_view> kSourceTags[] = {
    {Source::kMedquad, "medquad"}, {Source::kQald, "qald"},
    {Source::kMashqa, "mashqa"},   {Source::kMediqa, "mediqa"},
    {Source::kWikimed, "wikimed"}, {Source::kBiqa, "biqa"},
    {Source::kBioasq, "bioasq"},   {Source::kTrec, "trec"},
    {Source::kDevset, "devset"},   {Source::kOther, "other"},
};

constexpr std::pair<Split, std::string_view> kSplitTags[] = {
    {Split::kTrain, "train"},
    {Split::kValidation, "validation"},
    {Split::kTest, "test"},
};

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Scalar or (nested) array value -> text. Arrays yield their first
// non-empty element, which covers list-valued exact answers.
std::optional<std::string> AsText(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) {
    return v.dump();
  }
  if (v.is_array()) {
    for (const auto& e : v) {
      auto t = AsText(e);
      if (t && !text::Trim(*t).empty()) return t;
    }
    return std::string();
  }
  return std::nullopt;
}

// A row abstracted over JSONL objects and CSV records.
class Row {
 public:
  virtual ~Row() = default;
  virtual std::optional<std::string> Get(const std::string& key) const = 0;

  std::optional<std::string> First(const std::vector<std::string>& keys) const {
    for (const auto& k : keys) {
      if (auto v = Get(k)) return v;
    }
    return std::nullopt;
  }
};

class JsonRow : public Row {
 public:
  explicit JsonRow(const json& obj) : obj_(obj) {}
  std::optional<std::string> Get(const std::string& key) const override {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return std::nullopt;
    return AsText(*it);
  }

 private:
  const json& obj_;
};

class CsvRow : public Row {
 public:
  CsvRow(const std::vector<std::string>& header, const std::vector<std::string>& fields)
      : header_(header), fields_(fields) {}
  std::optional<std::string> Get(const std::string& key) const override {
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == key) return fields_[i];
    }
    return std::nullopt;
  }

 private:
  const std::vector<std::string>& header_;
  const std::vector<std::string>& fields_;
};

class Ingester {
 public:
  explicit Ingester(const SourceManifest& manifest)
      : manifest_(manifest), adapter_(AdapterFor(manifest.source)) {}

  void Skip(std::size_t row, std::string reason) {
    ++result_.skipped;
    if (result_.skip_reasons.size() < kMaxSkipReasons) {
      result_.skip_reasons.push_back("row " + std::to_string(row) + ": " + std::move(reason));
    }
  }

  void Accept(std::size_t row, const Row& r) {
    auto question = r.First(adapter_.question_keys);
    if (!question || text::Trim(*question).empty()) {
      Skip(row, "missing question");
      return;
    }
    QAPair pair;
    std::string tag(ToString(manifest_.source));
    if (auto native = r.First(adapter_.id_keys); native && !text::Trim(*native).empty()) {
      pair.id = tag + ":" + std::string(text::Trim(*native));
    } else {
      pair.id = tag + ":" + manifest_.path.stem().string() + "#" + std::to_string(row);
    }
    if (!seen_ids_.insert(pair.id).second) {
      Skip(row, "duplicate id " + pair.id);
      return;
    }
    pair.question = std::string(text::Trim(*question));
    pair.short_answer = std::string(text::Trim(r.First(adapter_.short_answer_keys).value_or("")));
    if (auto long_answer = r.First(adapter_.long_answer_keys)) {
      auto trimmed = text::Trim(*long_answer);
      if (!trimmed.empty()) pair.long_answer = std::string(trimmed);
    }
    pair.source = manifest_.source;
    pair.split = manifest_.split;
    result_.pairs.push_back(std::move(pair));
  }

  void IngestJsonl(std::string_view content) {
    std::size_t row = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
      auto eol = content.find('\n', pos);
      auto line = content.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                    : eol - pos);
      pos = eol == std::string_view::npos ? content.size() : eol + 1;
      if (text::Trim(line).empty()) continue;
      ++row;
      json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (obj.is_discarded()) {
        Skip(row, "invalid JSON");
        continue;
      }
      if (!obj.is_object()) {
        Skip(row, "not a JSON object");
        continue;
      }
      Accept(row, JsonRow(obj));
    }
  }

  void IngestCsv(std::string_view content) {
    auto records = ParseCsv(content);
    if (records.empty()) return;
    if (!records.front()) throw IoError("unreadable CSV header in " + manifest_.path.string());
    std::vector<std::string> header = *records.front();
    if (!header.empty() && text::StartsWith(header[0], "\xEF\xBB\xBF")) {
      header[0].erase(0, 3);
    }
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (!records[i]) {
        Skip(i, "unterminated quoted field");
        continue;
      }
      const auto& fields = *records[i];
      if (fields.size() == 1 && text::Trim(fields[0]).empty()) continue;
      if (fields.size() != header.size()) {
        Skip(i, "expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
        continue;
      }
      Accept(i, CsvRow(header, fields));
    }
  }

  IngestResult Run() {
    if (!std::filesystem::exists(manifest_.path)) {
      throw IoError("source file not found: " + manifest_.path.string());
    }
    std::string content = ReadFile(manifest_.path);
    InputFormat format = manifest_.format.value_or(
        text::ToLowerAscii(manifest_.path.extension().string()) == ".csv" ? InputFormat::kCsv
                                                                          : InputFormat::kJsonl);
    if (format == InputFormat::kCsv) {
      IngestCsv(content);
    } else {
      IngestJsonl(content);
    }
    if (manifest_.expected_count &&
        *manifest_.expected_count != static_cast<long long>(result_.pairs.size())) {
      throw ManifestViolation(std::string(ToString(manifest_.source)), *manifest_.expected_count,
                              static_cast<long long>(result_.pairs.size()));
    }
    return std::move(result_);
  }

 private:
  const SourceManifest& manifest_;
  const SourceAdapter& adapter_;
  IngestResult result_;
  std::unordered_set<std::string> seen_ids_;
};

std::uint64_t Bounded(std::mt19937_64& rng, std::uint64_t range) {
  // Rejection sampling; std::uniform_int_distribution is not portable.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % range;
}

}  // namespace

std::string_view ToString(Source source) {
  for (const auto& [s, tag] : kSourceTags) {
    if (s == source) return tag;
  }
  return "other";
}

std::string_view ToString(Split split) {
  for (const auto& [s, tag] : kSplitTags) {
    if (s == split) return tag;
  }
  return "train";
}

Source ParseSource(std::string_view tag) {
  for (const auto& [s, name] : kSourceTags) {
    if (name == tag) return s;
  }
  throw ConfigError("unknown source tag '" + std::string(tag) + "'");
}

Split ParseSplit(std::string_view tag) {
  for (const auto& [s, name] : kSplitTags) {
    if (name == tag) return s;
  }
  throw ConfigError("unknown split tag '" + std::string(tag) + "'");
}

void to_json(json& j, const QAPair& p) {
  j = json{{"id", p.id},
           {"question", p.question},
           {"short_answer", p.short_answer},
           {"long_answer", p.long_answer ? json(*p.long_answer) : json(nullptr)},
           {"source", ToString(p.source)},
           {"split", ToString(p.split)}};
}

void from_json(const json& j, QAPair& p) {
  try {
    if (!j.is_object()) throw DecodeError("QAPair must be a JSON object");
    p.id = j.at("id").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.short_answer = j.value("short_answer", std::string());
    auto la = j.find("long_answer");
    p.long_answer = (la == j.end() || la->is_null())
                        ? std::nullopt
                        : std::optional<std::string>(la->get<std::string>());
    p.source = ParseSource(j.value("source", std::string("other")));
    p.split = ParseSplit(j.value("split", std::string("train")));
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed QAPair: ") + e.what());
  } catch (const ConfigError& e) {
    throw DecodeError(std::string("malformed QAPair: ") + e.what());
  }
}

const SourceAdapter& AdapterFor(Source source) {
  static const std::vector<std::string> kIds = {"id", "qid", "question_id", "_id"};
  static const std::map<Source, SourceAdapter> kAdapters = {
      {Source::kMedquad,
       {kIds, {"question", "Question"}, {"short_answer", "exact_answer"},
        {"answer", "Answer", "long_answer"}}},
      {Source::kQald,
       {kIds, {"question", "query", "string"}, {"short_answer", "answer", "answers"},
        {"long_answer"}}},
      {Source::kMashqa,
       {kIds, {"question", "questions"}, {"short_answer", "answer_short"},
        {"answer", "long_answer"}}},
      {Source::kMediqa,
       {kIds, {"question", "Question"}, {"short_answer", "summary"},
        {"answer", "long_answer"}}},
      {Source::kWikimed,
       {kIds, {"question"}, {"short_answer", "answer"}, {"long_answer", "text"}}},
      {Source::kBiqa,
       {kIds, {"question", "title"}, {"short_answer", "answer"}, {"long_answer", "body"}}},
      {Source::kBioasq,
       {kIds, {"body", "question"}, {"exact_answer", "short_answer"},
        {"ideal_answer", "long_answer"}}},
      {Source::kTrec,
       {kIds, {"question", "text"}, {"short_answer", "answer"},
        {"long_answer", "answer_text"}}},
      {Source::kDevset,
       {kIds, {"question"}, {"short_answer", "answer"}, {"long_answer", "reasoning"}}},
      {Source::kOther,
       {kIds, {"question"}, {"short_answer", "answer"}, {"long_answer"}}},
  };
  return kAdapters.at(source);
}

std::vector<std::optional<std::vector<std::string>>> ParseCsv(std::string_view content) {
  std::vector<std::optional<std::vector<std::string>>> rows;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;
  auto end_row = [&] {
    fields.push_back(std::move(field));
    field.clear();
    rows.emplace_back(std::move(fields));
    fields.clear();
    row_started = false;
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    row_started = true;
    if (c == '"' && field.empty()) {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < content.size() && content[i + 1] == '\n') ++i;
      end_row();
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) {
    rows.emplace_back(std::nullopt);
  } else if (row_started || !field.empty() || !fields.empty()) {
    end_row();
  }
  return rows;
}

IngestResult IngestSource(const SourceManifest& manifest) { return Ingester(manifest).Run(); }

void to_json(json& j, const FilterPolicy& p) {
  j = json{{"min_question_tokens", p.min_question_tokens},
           {"min_answer_chars", p.min_answer_chars},
           {"strip_markup", p.strip_markup},
           {"reject_patterns", p.reject_patterns}};
}

void from_json(const json& j, FilterPolicy& p) {
  FilterPolicy d;
  try {
    p.min_question_tokens = j.value("min_question_tokens", d.min_question_tokens);
    p.min_answer_chars = j.value("min_answer_chars", d.min_answer_chars);
    p.strip_markup = j.value("strip_markup", d.strip_markup);
    p.reject_patterns = j.value("reject_patterns", d.reject_patterns);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid filter policy: ") + e.what());
  }
}

struct CompiledFilter::Patterns {
  std::vector<std::string> literals;
  std::vector<std::regex> regexes;
};

CompiledFilter::CompiledFilter(FilterPolicy policy)
    : policy_(std::move(policy)), patterns_(std::make_unique<Patterns>()) {
  if (policy_.min_question_tokens < 1) {
    throw ConfigError("min_question_tokens must be positive");
  }
  if (policy_.min_answer_chars < 1) throw ConfigError("min_answer_chars must be positive");
  for (const auto& p : policy_.reject_patterns) {
    if (text::StartsWith(p, "re:")) {
      try {
        patterns_->regexes.emplace_back(p.substr(3), std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ConfigError("invalid reject pattern '" + p + "': " + e.what());
      }
    } else if (!p.empty()) {
      patterns_->literals.push_back(p);
    }
  }
}

CompiledFilter::~CompiledFilter() = default;
CompiledFilter::CompiledFilter(CompiledFilter&&) noexcept = default;
CompiledFilter& CompiledFilter::operator=(CompiledFilter&&) noexcept = default;

std::optional<QAPair> CompiledFilter::Apply(QAPair pair) const {
  if (policy_.strip_markup) {
    pair.question = text::StripMarkup(pair.question);
    pair.short_answer = text::StripMarkup(pair.short_answer);
    if (pair.long_answer) {
      pair.long_answer = text::StripMarkup(*pair.long_answer);
      if (pair.long_answer->empty()) pair.long_answer.reset();
    }
  } else {
    pair.question = std::string(text::Trim(pair.question));
    pair.short_answer = std::string(text::Trim(pair.short_answer));
  }
  // Markup that survives (or was never stripped) disqualifies the pair.
  if (text::ContainsMarkup(pair.question) || text::ContainsMarkup(pair.short_answer)) {
    return std::nullopt;
  }
  if (text::CountWords(pair.question) < static_cast<std::size_t>(policy_.min_question_tokens)) {
    return std::nullopt;
  }
  if (text::CountCodePoints(pair.short_answer) <
      static_cast<std::size_t>(policy_.min_answer_chars)) {
    return std::nullopt;
  }
  for (const auto* field : {&pair.question, &pair.short_answer}) {
    for (const auto& lit : patterns_->literals) {
      if (field->find(lit) != std::string::npos) return std::nullopt;
    }
    for (const auto& re : patterns_->regexes) {
      if (std::regex_search(*field, re)) return std::nullopt;
    }
  }
  return pair;
}

FilterResult CleanFilter(std::vector<QAPair> pairs, const CompiledFilter& filter) {
  FilterResult result;
  const std::size_t total = pairs.size();
  result.kept.reserve(total);
  for (auto& p : pairs) {
    if (auto cleaned = filter.Apply(std::move(p))) result.kept.push_back(std::move(*cleaned));
  }
  result.dropped_count = total - result.kept.size();
  return result;
}

FilterResult CleanFilter(std::vector<QAPair> pairs, const FilterPolicy& policy) {
  return CleanFilter(std::move(pairs), CompiledFilter(policy));
}

std::vector<QAPair> Dedupe(const std::vector<QAPair>& pairs) {
  std::unordered_set<std::string> seen;
  std::vector<QAPair> out;
  for (const auto& p : pairs) {
    if (seen.insert(scoring::NormalizeAnswer(p.question).text()).second) out.push_back(p);
  }
  return out;
}

SplitResult SplitPairs(const std::vector<QAPair>& pairs, double train_fraction,
                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must be in (0, 1), got " +
                      std::to_string(train_fraction));
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[Bounded(rng, i)]);
  }
  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(pairs.size())));
  std::vector<bool> is_train(pairs.size(), false);
  for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = true;

  SplitResult out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    (is_train[i] ? out.train : out.validation).push_back(pairs[i]);
  }
  return out;
}

std::string ToJsonLine(const QAPair& pair) { return json(pair).dump(); }

std::vector<QAPair> ReadCorpus(const std::filesystem::path& path) {
  std::string content = ReadFile(path);
  std::vector<QAPair> out;
  std::istringstream in(content);
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
      out.push_back(j.get<QAPair>());
    } catch (const DecodeError& e) {
      throw DecodeError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void WriteCorpus(const std::filesystem::path& path, const std::vector<QAPair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) out << ToJsonLine(p) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

CorpusManifest ParseCorpusManifest(const json& j, const std::filesystem::path& base_dir) {
  CorpusManifest m;
  try {
    for (const auto& s : j.at("sources")) {
      SourceManifest sm;
      sm.source = ParseSource(s.at("source").get<std::string>());
      std::filesystem::path p = s.at("path").get<std::string>();
      sm.path = p.is_absolute() ? p : base_dir / p;
      if (s.contains("expected_count") && !s["expected_count"].is_null()) {
        auto count = s["expected_count"].get<long long>();
        if (count < 0) throw ConfigError("expected_count must be non-negative");
        sm.expected_count = count;
      }
      sm.split = ParseSplit(s.value(
          "split", std::string(sm.source == Source::kDevset ? "validation" : "train")));
      if (s.contains("format")) {
        auto f = s["format"].get<std::string>();
        if (f == "csv") {
          sm.format = InputFormat::kCsv;
        } else if (f == "jsonl") {
          sm.format = InputFormat::kJsonl;
        } else {
          throw ConfigError("unknown source format '" + f + "'");
        }
      }
      m.sources.push_back(std::move(sm));
    }
    if (j.contains("filter")) m.filter = j["filter"].get<FilterPolicy>();
    m.dedupe = j.value("dedupe", true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid corpus manifest: ") + e.what());
  }
  // Validate patterns now rather than after ingestion.
  CompiledFilter check(m.filter);
  return m;
}

CorpusManifest LoadCorpusManifest(const std::filesystem::path& path) {
  json j = json::parse(ReadFile(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("manifest is not valid JSON: " + path.string());
  return ParseCorpusManifest(j, path.parent_path());
}

BuildResult BuildCorpus(const CorpusManifest& manifest) {
  CompiledFilter filter(manifest.filter);

  std::vector<std::future<IngestResult>> jobs;
  jobs.reserve(manifest.sources.size());
  for (const auto& sm : manifest.sources) {
    jobs.push_back(std::async(std::launch::async, [&sm] { return IngestSource(sm); }));
  }

  BuildResult out;
  std::unordered_set<std::string> seen_questions;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    IngestResult ingested = jobs[i].get();
    auto& stats = out.stats[std::string(ToString(manifest.sources[i].source))];
    stats.ingested += ingested.pairs.size();
    stats.skipped += ingested.skipped;

    FilterResult filtered = CleanFilter(std::move(ingested.pairs), filter);
    stats.dropped += filtered.dropped_count;
    for (auto& p : filtered.kept) {
      if (!seen_ids.insert(p.id).second) {
        ++stats.duplicates;
        continue;
      }
      if (manifest.dedupe &&
          !seen_questions.insert(scoring::NormalizeAnswer(p.question).text()).second) {
        ++stats.duplicates;
        continue;
      }
      ++stats.kept;
      out.corpus.push_back(std::move(p));
    }
  }
  return out;
}

json StatsToJson(const std::map<std::string, SourceStats>& stats) {
  json per_source = json::object();
  for (const auto& [tag, s] : stats) {
    per_source[tag] = {{"ingested", s.ingested},
                       {"skipped", s.skipped},
                       {"kept", s.kept},
                       {"dropped", s.dropped},
                       {"duplicates", s.duplicates}};
  }
  return json{{"per_source", per_source}};
}

}  // namespace bioqa::corpus
