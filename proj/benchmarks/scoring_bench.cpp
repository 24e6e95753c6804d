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

#include <benchmark/benchmark.h>

#include "bioqa/llm_client.hpp"
#include "bioqa/pipeline.hpp"
#include "bioqa/scoring.hpp"

namespace {

using namespace bioqa;

const char* const kVerbose =
    "A common risk factor for both ectopic pregnancy and gastrointestinal diseases is pelvic "
    "inflammatory disease (PID).";

void BM_NormalizeAscii(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(scoring::NormalizeAnswer("The pelvic inflammatory disease (PID)."));
  }
}
BENCHMARK(BM_NormalizeAscii);

void BM_NormalizeUnicode(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(scoring::NormalizeAnswer("The Sjögren's syndrome – Amyloid-β ﬁbrils"));
  }
}
BENCHMARK(BM_NormalizeUnicode);

void BM_ExactMatchWithAliases(benchmark::State& state) {
  auto table = scoring::SynonymTable::DefaultChromosomeAliases();
  for (auto _ : state) {
    benchmark::DoNotOptimize(scoring::ExactMatch("2 chromosome", "Chromosome 2", table));
  }
}
BENCHMARK(BM_ExactMatchWithAliases);

void BM_TokenF1(benchmark::State& state) {
  auto a = scoring::NormalizeAnswer("pelvic inflammatory disease pid");
  auto b = scoring::NormalizeAnswer("pelvic inflammatory disease");
  for (auto _ : state) benchmark::DoNotOptimize(scoring::TokenF1(a, b));
}
BENCHMARK(BM_TokenF1);

void BM_ConceptMatch(benchmark::State& state) {
  scoring::Scorer scorer(scoring::SynonymTable::DefaultChromosomeAliases());
  for (auto _ : state) {
    benchmark::DoNotOptimize(scorer.Match("Chromosome 2p13", "Chromosome 2"));
  }
}
BENCHMARK(BM_ConceptMatch);

void BM_HeuristicExtract(benchmark::State& state) {
  pipeline::ValidityRule rule;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::HeuristicExtract(kVerbose, rule));
}
BENCHMARK(BM_HeuristicExtract);

void BM_CacheKey(benchmark::State& state) {
  llm::DecodingConfig d;
  for (auto _ : state) benchmark::DoNotOptimize(llm::CacheKey("llama-3-8b", kVerbose, d));
}
BENCHMARK(BM_CacheKey);

}  // namespace

BENCHMARK_MAIN();
