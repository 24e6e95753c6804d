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

#include "bioqa/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "bioqa/config.hpp"
#include "bioqa/corpus.hpp"
#include "bioqa/error.hpp"
#include "bioqa/llm_client.hpp"
#include "bioqa/mocksvc.hpp"
#include "bioqa/pipeline.hpp"
#include "bioqa/report.hpp"

namespace bioqa::cli {
namespace {

using nlohmann::json;

std::atomic<bool> g_interrupted{false};

extern "C" void OnSignal(int) { g_interrupted = true; }

struct CommonFlags {
  std::string config_path;
};

config::RunConfig LoadConfig(const CommonFlags& flags) {
  return flags.config_path.empty() ? config::Defaults() : config::Load(flags.config_path);
}

void PrintDigest(const config::RunConfig& cfg, std::ostream& err) {
  err << "config digest: " << config::Digest(cfg) << '\n';
}

void WriteJsonFile(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

json ReadJson(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return j;
}

// --- ingest -----------------------------------------------------------------

struct IngestFlags {
  std::string manifest;
  std::string out;
  std::string stats;
  std::optional<double> train_fraction;
  std::uint64_t seed = 42;
};

int RunIngest(const CommonFlags& common, const IngestFlags& f, std::ostream& err) {
  auto cfg = LoadConfig(common);
  PrintDigest(cfg, err);

  json raw = ReadJson(f.manifest);
  auto manifest = corpus::ParseCorpusManifest(raw, std::filesystem::path(f.manifest).parent_path());
  if (!raw.contains("filter")) manifest.filter = cfg.filter;

  auto built = corpus::BuildCorpus(manifest);
  if (f.train_fraction) {
    auto parts = corpus::SplitPairs(built.corpus, *f.train_fraction, f.seed);
    std::unordered_set<std::string> validation_ids;
    for (const auto& p : parts.validation) validation_ids.insert(p.id);
    for (auto& p : built.corpus) {
      p.split = validation_ids.count(p.id) ? corpus::Split::kValidation : corpus::Split::kTrain;
    }
  }
  corpus::WriteCorpus(f.out, built.corpus);

  json stats = corpus::StatsToJson(built.stats);
  stats["total"] = built.corpus.size();
  stats["filter"] = manifest.filter;
  std::string stats_path = f.stats.empty() ? f.out + ".stats.json" : f.stats;
  WriteJsonFile(stats_path, stats);
  err << "ingested " << built.corpus.size() << " pairs -> " << f.out << " (stats: " << stats_path
      << ")\n";
  return kExitOk;
}

// --- infer ------------------------------------------------------------------

struct InferFlags {
  std::string corpus;
  std::string out;
  std::optional<std::string> mode;
  std::optional<std::string> base_url;
  std::optional<std::string> model;
  std::optional<std::string> cache_dir;
  bool no_cache = false;
  std::optional<int> max_in_flight;
  std::optional<int> max_attempts;
  std::string checkpoint;
  std::optional<std::string> split;
  std::optional<std::size_t> limit;
};

int RunInfer(const CommonFlags& common, const InferFlags& f, std::ostream& err) {
  auto cfg = LoadConfig(common);
  if (f.mode) cfg.pipeline.mode = pipeline::ParseMode(*f.mode);
  if (f.base_url) cfg.endpoint.base_url = *f.base_url;
  if (f.model) cfg.endpoint.model_name = *f.model;
  if (f.cache_dir) cfg.cache_dir = *f.cache_dir;
  if (f.no_cache) cfg.cache_enabled = false;
  if (f.max_in_flight) cfg.max_in_flight = *f.max_in_flight;
  if (f.max_attempts) cfg.pipeline.max_extract_attempts = *f.max_attempts;
  cfg.pipeline.Validate();
  if (cfg.max_in_flight < 1) throw ConfigError("max_in_flight must be positive");
  PrintDigest(cfg, err);

  auto questions = corpus::ReadCorpus(f.corpus);
  if (f.split) {
    auto wanted = corpus::ParseSplit(*f.split);
    std::erase_if(questions, [&](const corpus::QAPair& p) { return p.split != wanted; });
  }
  if (f.limit && questions.size() > *f.limit) questions.resize(*f.limit);

  llm::ClientOptions options;
  options.max_in_flight = cfg.max_in_flight;
  if (cfg.cache_enabled) options.cache_dir = cfg.cache_dir;
  llm::Client client(cfg.endpoint, options);

  pipeline::BatchOptions batch;
  batch.max_in_flight = cfg.max_in_flight;
  batch.checkpoint = f.checkpoint.empty() ? f.out + ".checkpoint" : f.checkpoint;
  auto records = pipeline::RunBatch(client, questions, cfg.pipeline, batch);
  pipeline::WriteResults(f.out, records);

  std::size_t errors = 0, fallbacks = 0;
  for (const auto& r : records) {
    if (!r.result) {
      ++errors;
      err << "error: " << *r.error << '\n';
    } else if (r.result->used_fallback) {
      ++fallbacks;
    }
  }
  auto stats = client.stats();
  err << "infer: " << records.size() << " questions, " << errors << " errors, " << fallbacks
      << " fallbacks; " << stats.requests_sent << " requests, " << stats.cache_hits
      << " cache hits -> " << f.out << '\n';
  return kExitOk;
}

// --- score ------------------------------------------------------------------

struct ScoreFlags {
  std::string results;
  std::string gold;
  std::string out;
  std::optional<double> threshold;
  std::optional<std::string> synonyms;
  std::optional<double> id_tolerance;
  std::string finetune_manifest;
};

int RunScore(const CommonFlags& common, const ScoreFlags& f, std::ostream& out,
             std::ostream& err) {
  auto cfg = LoadConfig(common);
  if (f.threshold) cfg.scorer.concept_threshold = *f.threshold;
  if (f.synonyms) cfg.scorer.synonyms = *f.synonyms;
  if (f.id_tolerance) cfg.id_mismatch_tolerance = *f.id_tolerance;
  scoring::ValidateThreshold(cfg.scorer.concept_threshold);
  PrintDigest(cfg, err);

  report::AggregateOptions options;
  options.scorer = cfg.scorer;
  options.id_mismatch_tolerance = cfg.id_mismatch_tolerance;
  options.run_echo = {{"config", config::ToJson(cfg)}, {"config_digest", config::Digest(cfg)}};
  if (!f.finetune_manifest.empty()) {
    auto check = config::LoadFinetuneManifest(f.finetune_manifest);
    options.run_echo["finetune_manifest"] = check.manifest;
    options.run_echo["finetune_deviations"] = check.deviations;
    for (const auto& d : check.deviations) err << "finetune manifest deviates: " << d << '\n';
  }

  auto summary = report::Aggregate(pipeline::ReadResults(f.results), corpus::ReadCorpus(f.gold),
                                   options);
  if (f.out.empty()) {
    out << report::SummaryToJson(summary).dump(2) << '\n';
  } else {
    report::EmitReport(summary, f.out);
  }
  err << "score: n=" << summary.n << " em=" << summary.em_micro
      << " concept(proxy)=" << summary.concept_micro << " fallback_rate=" << summary.fallback_rate
      << '\n';
  return kExitOk;
}

// --- submit -----------------------------------------------------------------

struct SubmitFlags {
  std::string results;
  std::string out;
};

int RunSubmit(const CommonFlags& common, const SubmitFlags& f, std::ostream& err) {
  auto cfg = LoadConfig(common);
  PrintDigest(cfg, err);
  auto records = pipeline::ReadResults(f.results);
  auto warnings = report::EmitSubmission(records, f.out);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  err << "submit: " << records.size() << " rows -> " << f.out << '\n';
  return kExitOk;
}

// --- serve-mock -------------------------------------------------------------

struct ServeFlags {
  std::string transcript;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string ready_file;
  double max_seconds = 0;
};

int RunServeMock(const CommonFlags& common, const ServeFlags& f, std::ostream& err) {
  auto cfg = LoadConfig(common);
  PrintDigest(cfg, err);
  mocksvc::MockServer server(mocksvc::Transcript::Load(f.transcript));
  int port = server.Start(f.port, f.host);
  err << "serve-mock: listening on " << server.base_url() << '\n';
  err.flush();
  if (!f.ready_file.empty()) {
    std::ofstream ready(f.ready_file, std::ios::trunc);
    ready << port << '\n';
  }

  g_interrupted = false;
  auto prev_int = std::signal(SIGINT, OnSignal);
  auto prev_term = std::signal(SIGTERM, OnSignal);
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(static_cast<long long>(f.max_seconds * 1000));
  while (!g_interrupted &&
         (f.max_seconds <= 0 || std::chrono::steady_clock::now() < deadline)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.Stop();
  std::signal(SIGINT, prev_int);
  std::signal(SIGTERM, prev_term);
  err << "serve-mock: served " << server.request_count() << " requests\n";
  return kExitOk;
}

}  // namespace

int Dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Biomedical short-answer QA harness", args.empty() ? "bioqa" : args[0]};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bioqa 0.1.0");

  CommonFlags common;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Run config (JSON)")->check(CLI::ExistingFile);
  };

  IngestFlags ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Source manifests -> corpus JSONL + stats");
  add_config(ingest_cmd);
  ingest_cmd->add_option("--manifest", ingest.manifest, "Corpus manifest (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest.out, "Corpus JSONL output")->required();
  ingest_cmd->add_option("--stats", ingest.stats, "Stats JSON output (default <out>.stats.json)");
  ingest_cmd->add_option("--train-fraction", ingest.train_fraction,
                         "Re-split the corpus into train/validation");
  ingest_cmd->add_option("--seed", ingest.seed, "Split seed")->capture_default_str();

  InferFlags infer;
  auto* infer_cmd = app.add_subcommand("infer", "Corpus -> results JSONL via the pipeline");
  add_config(infer_cmd);
  infer_cmd->add_option("--corpus", infer.corpus, "Corpus JSONL")->required()->check(
      CLI::ExistingFile);
  infer_cmd->add_option("--out", infer.out, "Results JSONL output")->required();
  infer_cmd->add_option("--mode", infer.mode, "combined | short_only | long_only");
  infer_cmd->add_option("--base-url", infer.base_url, "Endpoint base URL");
  infer_cmd->add_option("--model", infer.model, "Model name");
  infer_cmd->add_option("--cache-dir", infer.cache_dir, "Response cache directory");
  infer_cmd->add_flag("--no-cache", infer.no_cache, "Disable the response cache");
  infer_cmd->add_option("--max-in-flight", infer.max_in_flight, "Concurrent questions");
  infer_cmd->add_option("--max-attempts", infer.max_attempts, "Stage-2 extraction attempts");
  infer_cmd->add_option("--checkpoint", infer.checkpoint,
                        "Checkpoint file (default <out>.checkpoint)");
  infer_cmd->add_option("--split", infer.split, "Only questions from this split");
  infer_cmd->add_option("--limit", infer.limit, "Only the first N questions");

  ScoreFlags score;
  auto* score_cmd = app.add_subcommand("score", "Results + gold -> report JSON");
  add_config(score_cmd);
  score_cmd->add_option("--results", score.results, "Results JSONL")->required()->check(
      CLI::ExistingFile);
  score_cmd->add_option("--gold", score.gold, "Gold corpus JSONL")->required()->check(
      CLI::ExistingFile);
  score_cmd->add_option("--out", score.out, "Report JSON output (default stdout)");
  score_cmd->add_option("--threshold", score.threshold, "Concept-match token-F1 threshold");
  score_cmd->add_option("--synonyms", score.synonyms, "default | none | path to TSV");
  score_cmd->add_option("--id-tolerance", score.id_tolerance,
                        "Tolerated fraction of unaligned ids");
  score_cmd->add_option("--finetune-manifest", score.finetune_manifest,
                        "Fine-tuning manifest to validate and echo")
      ->check(CLI::ExistingFile);

  SubmitFlags submit;
  auto* submit_cmd = app.add_subcommand("submit", "Results -> submission TSV");
  add_config(submit_cmd);
  submit_cmd->add_option("--results", submit.results, "Results JSONL")->required()->check(
      CLI::ExistingFile);
  submit_cmd->add_option("--out", submit.out, "Submission TSV output")->required();

  ServeFlags serve;
  auto* serve_cmd = app.add_subcommand("serve-mock", "Replay a transcript as a model endpoint");
  add_config(serve_cmd);
  serve_cmd->add_option("--transcript", serve.transcript, "Transcript JSON")->required()->check(
      CLI::ExistingFile);
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--ready-file", serve.ready_file, "Write the bound port here once ready");
  serve_cmd->add_option("--max-seconds", serve.max_seconds, "Exit after this long (0 = never)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("bioqa");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "usage error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*ingest_cmd) return RunIngest(common, ingest, err);
    if (*infer_cmd) return RunInfer(common, infer, err);
    if (*score_cmd) return RunScore(common, score, out, err);
    if (*submit_cmd) return RunSubmit(common, submit, err);
    if (*serve_cmd) return RunServeMock(common, serve, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int Main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return Dispatch(args, std::cout, std::cerr);
}

}  // namespace bioqa::cli
