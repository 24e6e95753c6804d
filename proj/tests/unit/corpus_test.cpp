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

#include <gtest/gtest.h>

#include <set>

#include "bioqa/error.hpp"
#include "test_support.hpp"

namespace bioqa::corpus {
namespace {

using testing::TempDir;
using testing::WriteAll;

QAPair Pair(std::string id, std::string q, std::string a = "answer") {
  QAPair p;
  p.id = std::move(id);
  p.question = std::move(q);
  p.short_answer = std::move(a);
  return p;
}

TEST(EnumTest, RoundTrip) {
  for (auto s : {Source::kMedquad, Source::kQald, Source::kMashqa, Source::kMediqa,
                 Source::kWikimed, Source::kBiqa, Source::kBioasq, Source::kTrec,
                 Source::kDevset, Source::kOther}) {
    EXPECT_EQ(ParseSource(ToString(s)), s);
  }
  EXPECT_EQ(ParseSplit("validation"), Split::kValidation);
  EXPECT_THROW(ParseSource("pubmed"), ConfigError);
  EXPECT_THROW(ParseSplit("dev"), ConfigError);
}

TEST(QAPairTest, JsonRoundTrip) {
  QAPair p = Pair("bioasq:1", "What is PKU?", "Phenylketonuria");
  p.long_answer = "An inherited disorder.";
  p.source = Source::kBioasq;
  p.split = Split::kTest;
  auto line = ToJsonLine(p);
  EXPECT_EQ(nlohmann::json::parse(line).get<QAPair>(), p);
  EXPECT_EQ(line.find('\n'), std::string::npos);
}

TEST(IngestTest, JsonlSkipsBadRowsAndPrefixesIds) {
  TempDir dir;
  WriteAll(dir / "bioasq.jsonl",
           "{\"id\":\"a\",\"body\":\"What causes scurvy in sailors?\",\"exact_answer\":\"Vitamin C "
           "deficiency\"}\n"
           "not json\n"
           "\n"
           "[1,2]\n"
           "{\"id\":\"b\",\"exact_answer\":\"x\"}\n"
           "{\"id\":\"a\",\"body\":\"dup?\",\"exact_answer\":\"x\"}\n"
           "{\"body\":\"Which gene is mutated in cystic fibrosis?\",\"exact_answer\":\"CFTR\"}\n");
  auto r = IngestSource({Source::kBioasq, dir / "bioasq.jsonl", std::nullopt, Split::kTrain, {}});
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].id, "bioasq:a");
  EXPECT_EQ(r.pairs[0].short_answer, "Vitamin C deficiency");
  EXPECT_EQ(r.pairs[1].id.rfind("bioasq:bioasq#", 0), 0u);
  EXPECT_EQ(r.skipped, 4u);
  EXPECT_EQ(r.skip_reasons.size(), 4u);
}

TEST(IngestTest, ManifestCountMismatchRaises) {
  TempDir dir;
  WriteAll(dir / "d.jsonl", "{\"id\":\"1\",\"question\":\"What is the question here?\"}\n");
  SourceManifest m{Source::kDevset, dir / "d.jsonl", 2, Split::kValidation, {}};
  try {
    IngestSource(m);
    FAIL() << "expected ManifestViolation";
  } catch (const ManifestViolation& e) {
    EXPECT_NE(std::string(e.what()).find("expected 2 records, ingested 1"), std::string::npos);
  }
  m.expected_count = 1;
  EXPECT_EQ(IngestSource(m).pairs.size(), 1u);
}

TEST(IngestTest, MissingFileIsIoError) {
  EXPECT_THROW(IngestSource({Source::kOther, "/nonexistent/x.jsonl", {}, Split::kTrain, {}}),
               IoError);
}

TEST(IngestTest, CsvWithQuotedFields) {
  TempDir dir;
  WriteAll(dir / "m.csv",
           "qid,Question,short_answer,Answer\r\n"
           "1,\"Which organ, mainly, is hit?\",Liver,\"Multi\nline \"\"long\"\" answer\"\r\n"
           "2,too,few\r\n"
           "3,What treats strep throat?,Penicillin,\r\n");
  auto r = IngestSource({Source::kMedquad, dir / "m.csv", {}, Split::kTrain, InputFormat::kCsv});
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].question, "Which organ, mainly, is hit?");
  EXPECT_EQ(r.pairs[0].long_answer, "Multi\nline \"long\" answer");
  EXPECT_EQ(r.pairs[1].long_answer, std::nullopt);
  EXPECT_EQ(r.skipped, 1u);
}

TEST(ParseCsvTest, UnterminatedQuoteMarksRowBad) {
  auto rows = ParseCsv("a,b\n\"x,y\n");
  ASSERT_GE(rows.size(), 2u);
  ASSERT_TRUE(rows[0].has_value());
  EXPECT_FALSE(rows.back().has_value());
}

TEST(FilterTest, PolicyExamples) {
  FilterPolicy policy;
  auto out = CleanFilter({Pair("1", "Why?"), Pair("2", "<p>What is PKU?</p>", "Phenylketonuria"),
                          Pair("3", "What is the cause?", "")},
                         policy);
  ASSERT_EQ(out.kept.size(), 1u);
  EXPECT_EQ(out.kept[0].question, "What is PKU?");
  EXPECT_EQ(out.dropped_count, 2u);
}

TEST(FilterTest, MarkupKeptOnlyWhenStripping) {
  FilterPolicy policy;
  policy.strip_markup = false;
  auto out = CleanFilter({Pair("2", "<b>What</b> is PKU?")}, policy);
  EXPECT_TRUE(out.kept.empty());
}

TEST(FilterTest, EntitiesDecoded) {
  auto out = CleanFilter({Pair("1", "What is PKU &amp; why?", "x"),
                          Pair("2", "&lt;b&gt;What&lt;/b&gt; is PKU?", "x")},
                         FilterPolicy{});
  ASSERT_EQ(out.kept.size(), 2u);
  EXPECT_EQ(out.kept[0].question, "What is PKU & why?");
  // Escaped tags count as markup too.
  EXPECT_EQ(out.kept[1].question, "What is PKU?");
}

TEST(FilterTest, RejectPatterns) {
  FilterPolicy policy;
  policy.reject_patterns = {"lorem", "re:^\\s*TODO"};
  auto out = CleanFilter({Pair("1", "What is lorem ipsum text?"), Pair("2", "TODO fill this in"),
                          Pair("3", "What is the normal value?")},
                         policy);
  ASSERT_EQ(out.kept.size(), 1u);
  EXPECT_EQ(out.kept[0].id, "3");
  policy.reject_patterns = {"re:(unclosed"};
  EXPECT_THROW(CompiledFilter{policy}, ConfigError);
  policy.reject_patterns = {};
  policy.min_question_tokens = -1;
  EXPECT_THROW(CompiledFilter{policy}, ConfigError);
}

TEST(DedupeTest, KeepsFirstOccurrenceInOrder) {
  auto out = Dedupe({Pair("1", "What is A1?"), Pair("2", "What is B2?"), Pair("3", "What is C3?"),
                     Pair("4", "  what is b2 "), Pair("5", "What is E5?")});
  std::vector<std::string> ids;
  for (const auto& p : out) ids.push_back(p.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"1", "2", "3", "5"}));
}

TEST(SplitTest, DeterministicPartition) {
  std::vector<QAPair> pairs;
  for (int i = 0; i < 100; ++i) pairs.push_back(Pair(std::to_string(i), "q"));
  auto a = SplitPairs(pairs, 0.8, 42);
  auto b = SplitPairs(pairs, 0.8, 42);
  auto c = SplitPairs(pairs, 0.8, 7);
  EXPECT_EQ(a.train.size(), 80u);
  EXPECT_EQ(a.validation.size(), 20u);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
  std::set<std::string> all;
  for (const auto& p : a.train) all.insert(p.id);
  for (const auto& p : a.validation) all.insert(p.id);
  EXPECT_EQ(all.size(), 100u);
  EXPECT_THROW(SplitPairs(pairs, 1.0, 1), ConfigError);
  EXPECT_THROW(SplitPairs(pairs, 0.0, 1), ConfigError);
}

TEST(BuildCorpusTest, FixtureManifest) {
  auto m = LoadCorpusManifest(testing::FixturePath("e2e/manifest.json"));
  ASSERT_EQ(m.sources.size(), 3u);
  auto built = BuildCorpus(m);
  EXPECT_EQ(built.corpus.size(), 9u);
  EXPECT_EQ(built.stats.at("medquad").dropped, 1u);
  EXPECT_EQ(built.stats.at("medquad").duplicates, 1u);
  EXPECT_EQ(built.stats.at("bioasq").kept, 4u);
  for (const auto& p : built.corpus) {
    if (p.source == Source::kDevset) EXPECT_EQ(p.split, Split::kValidation);
  }
  auto j = StatsToJson(built.stats);
  EXPECT_EQ(j["per_source"]["devset"]["ingested"], 3);

  TempDir dir;
  WriteCorpus(dir / "c.jsonl", built.corpus);
  EXPECT_EQ(ReadCorpus(dir / "c.jsonl"), built.corpus);
}

TEST(ManifestTest, RejectsBadFormat) {
  nlohmann::json j = {{"sources", {{{"source", "medquad"}, {"path", "x"}, {"format", "xml"}}}}};
  EXPECT_THROW(ParseCorpusManifest(j, "."), ConfigError);
  nlohmann::json neg = {{"sources", {{{"source", "medquad"}, {"path", "x"}, {"expected_count", -1}}}}};
  EXPECT_THROW(ParseCorpusManifest(neg, "."), ConfigError);
}

}  // namespace
}  // namespace bioqa::corpus
