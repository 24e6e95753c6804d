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

#include "bioqa/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "bioqa/error.hpp"

namespace bioqa::report {
namespace {

using nlohmann::json;

constexpr std::string_view kConceptLabel =
    "proxy metric: exact match after synonym resolution, or token-F1 >= concept_threshold";

struct Tally {
  std::size_t n = 0;
  std::size_t em = 0;
  std::size_t concept_hits = 0;
};

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Replaces tabs and line breaks; returns true if anything changed.
bool SanitizeField(std::string& s) {
  bool changed = false;
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') {
      c = ' ';
      changed = true;
    }
  }
  return changed;
}

}  // namespace

ScoreSummary Aggregate(const std::vector<pipeline::BatchRecord>& results,
                       const std::vector<corpus::QAPair>& gold, const AggregateOptions& options) {
  if (!(options.id_mismatch_tolerance >= 0.0 && options.id_mismatch_tolerance <= 1.0)) {
    throw ConfigError("id_mismatch_tolerance must be in [0, 1]");
  }
  scoring::Scorer scorer(scoring::LoadSynonyms(options.scorer),
                         options.scorer.concept_threshold, options.scorer.normalize);

  std::unordered_map<std::string_view, const corpus::QAPair*> gold_by_id;
  for (const auto& g : gold) {
    if (!gold_by_id.emplace(g.id, &g).second) {
      throw EvaluationError("duplicate gold id " + g.id);
    }
  }

  ScoreSummary s;
  std::unordered_set<std::string_view> seen;
  Tally total;
  std::size_t fallbacks = 0;
  std::map<std::string, Tally> by_source;
  for (const auto& rec : results) {
    if (!seen.insert(rec.question_id).second) {
      throw EvaluationError("duplicate result id " + rec.question_id);
    }
    auto it = gold_by_id.find(rec.question_id);
    if (it == gold_by_id.end()) {
      s.unmatched_ids.push_back(rec.question_id);
      continue;
    }
    const std::string prediction = rec.result ? rec.result->final_answer : std::string();
    if (!rec.result) ++s.error_count;
    if (rec.result && rec.result->used_fallback) ++fallbacks;

    auto m = scorer.Match(prediction, it->second->short_answer);
    auto& src = by_source[std::string(corpus::ToString(it->second->source))];
    for (Tally* t : {&total, &src}) {
      ++t->n;
      t->em += m.em();
      t->concept_hits += m.concept_match();
    }
  }
  for (const auto& g : gold) {
    if (seen.count(g.id) == 0) s.missing_ids.push_back(g.id);
  }
  std::sort(s.unmatched_ids.begin(), s.unmatched_ids.end());
  std::sort(s.missing_ids.begin(), s.missing_ids.end());

  if (total.n == 0) throw EvaluationError("no results align with gold ids (n = 0)");
  const std::size_t mismatched = s.unmatched_ids.size() + s.missing_ids.size();
  const double mismatch_rate = Ratio(mismatched, results.size() + s.missing_ids.size());
  if (mismatch_rate > options.id_mismatch_tolerance) {
    throw EvaluationError(std::to_string(mismatched) + " ids present on only one side (rate " +
                          std::to_string(mismatch_rate) + " > tolerance " +
                          std::to_string(options.id_mismatch_tolerance) + ")");
  }

  s.n = total.n;
  s.em_micro = Ratio(total.em, total.n);
  s.concept_micro = Ratio(total.concept_hits, total.n);
  s.fallback_rate = Ratio(fallbacks, total.n);
  for (const auto& [tag, t] : by_source) {
    s.per_source[tag] = SourceScore{t.n, Ratio(t.em, t.n), Ratio(t.concept_hits, t.n)};
  }

  const auto& table = scorer.table();
  s.config_echo = {
      {"scorer", options.scorer},
      {"synonym_table", {{"entries", table.size()}, {"sha256", table.Digest()}}},
      {"id_mismatch_tolerance", options.id_mismatch_tolerance},
      {"concept_metric", kConceptLabel},
  };
  if (!options.run_echo.is_null()) s.config_echo["run"] = options.run_echo;
  return s;
}

ScoreSummary Aggregate(const std::vector<pipeline::PipelineResult>& results,
                       const std::vector<corpus::QAPair>& gold, const AggregateOptions& options) {
  std::vector<pipeline::BatchRecord> records;
  records.reserve(results.size());
  for (const auto& r : results) records.push_back({r.question_id, r, std::nullopt});
  return Aggregate(records, gold, options);
}

json SummaryToJson(const ScoreSummary& s) {
  json per_source = json::object();
  for (const auto& [tag, src] : s.per_source) {
    per_source[tag] = {{"n", src.n}, {"em", src.em}, {"concept", src.concept_rate}};
  }
  return json{{"n", s.n},
              {"em_micro", s.em_micro},
              {"concept_micro", s.concept_micro},
              {"fallback_rate", s.fallback_rate},
              {"error_count", s.error_count},
              {"per_source", per_source},
              {"unmatched_ids", s.unmatched_ids},
              {"missing_ids", s.missing_ids},
              {"config_echo", s.config_echo},
              {"labels",
               {{"em_micro", "exact match after normalization and synonym resolution"},
                {"concept_micro", kConceptLabel}}}};
}

ScoreSummary SummaryFromJson(const json& j) {
  ScoreSummary s;
  try {
    s.n = j.at("n").get<std::size_t>();
    s.em_micro = j.at("em_micro").get<double>();
    s.concept_micro = j.at("concept_micro").get<double>();
    s.fallback_rate = j.at("fallback_rate").get<double>();
    s.error_count = j.value("error_count", std::size_t{0});
    for (const auto& [tag, src] : j.at("per_source").items()) {
      s.per_source[tag] = SourceScore{src.at("n").get<std::size_t>(), src.at("em").get<double>(),
                                      src.at("concept").get<double>()};
    }
    s.unmatched_ids = j.value("unmatched_ids", std::vector<std::string>{});
    s.missing_ids = j.value("missing_ids", std::vector<std::string>{});
    s.config_echo = j.value("config_echo", json::object());
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed report: ") + e.what());
  }
  return s;
}

AggregateOptions OptionsFromEcho(const json& echo) {
  AggregateOptions o;
  try {
    o.scorer = echo.at("scorer").get<scoring::ScorerConfig>();
    o.id_mismatch_tolerance = echo.value("id_mismatch_tolerance", 0.0);
    if (echo.contains("run")) o.run_echo = echo["run"];
  } catch (const json::exception& e) {
    throw DecodeError(std::string("report config_echo is incomplete: ") + e.what());
  }
  return o;
}

void EmitReport(const ScoreSummary& summary, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write report " + path.string());
  out << SummaryToJson(summary).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ScoreSummary ReadReport(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw DecodeError("report is not valid JSON: " + path.string());
  return SummaryFromJson(j);
}

std::string RenderSubmission(const std::vector<pipeline::BatchRecord>& results,
                             std::vector<std::string>* warnings) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.reserve(results.size());
  for (const auto& r : results) {
    std::string id = r.question_id;
    std::string answer = r.result ? r.result->final_answer : std::string();
    if (SanitizeField(id) && warnings) {
      warnings->push_back("id '" + id + "': tab or line break replaced by space in id");
    }
    if (SanitizeField(answer) && warnings) {
      warnings->push_back("id '" + id + "': tab or line break replaced by space in answer");
    }
    rows.emplace_back(std::move(id), std::move(answer));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out = "id\tanswer\n";
  for (const auto& [id, answer] : rows) {
    out += id;
    out += '\t';
    out += answer;
    out += '\n';
  }
  return out;
}

std::vector<std::string> EmitSubmission(const std::vector<pipeline::BatchRecord>& results,
                                        const std::filesystem::path& path) {
  std::vector<std::string> warnings;
  std::string content = RenderSubmission(results, &warnings);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write submission " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
  return warnings;
}

}  // namespace bioqa::report
