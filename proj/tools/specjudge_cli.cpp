// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

// Command-line front end. Talks to the library only through the C API.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "specjudge/specjudge.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct CorpusDeleter {
  void operator()(sj_corpus* c) const { sj_corpus_free(c); }
};
struct HarnessDeleter {
  void operator()(sj_harness* h) const { sj_harness_free(h); }
};
using CorpusPtr = std::unique_ptr<sj_corpus, CorpusDeleter>;
using HarnessPtr = std::unique_ptr<sj_harness, HarnessDeleter>;

// Raised by subcommand handlers to turn a failed library call into exit 1.
struct DomainFailure {
  sj_status status;
};

void check(sj_status status) {
  if (status != SJ_OK) throw DomainFailure{status};
}

struct Options {
  std::string log_level = "warn";
  std::string format = "table";
  std::string out;
  bool deterministic = false;

  std::string corpus;
  std::string mapping;
  std::string config;
  std::string cache;
  std::string tier;
  std::string backend = "live";
  std::string transcript;
  std::string mock_rules;
  std::string run_id;
  unsigned workers = 0;
  bool drop_partial_pairs = false;
  double threshold = 0.75;
  std::string engineers;
  std::string judges;
  std::string artifacts;
  bool strict_denominator = false;
  std::size_t cwe_top = 0;
  std::string blind;
  std::string feature;
  std::string input;
};

sj_format format_of(const Options& o) {
  return o.format == "machine" ? SJ_FORMAT_MACHINE : SJ_FORMAT_TABLE;
}

void write_output(const Options& o, char* text) {
  std::unique_ptr<char, void (*)(char*)> owned(text, sj_string_free);
  if (o.out.empty()) {
    std::fputs(owned.get(), stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
  file << owned.get();
  if (!file) {
    std::cerr << "error: cannot write " << o.out << "\n";
    throw DomainFailure{SJ_ERR_FILE};
  }
}

CorpusPtr load_corpus(const Options& o) {
  sj_corpus* c = nullptr;
  check(sj_corpus_load(o.corpus.c_str(), o.mapping.empty() ? nullptr : o.mapping.c_str(), &c));
  return CorpusPtr(c);
}

HarnessPtr make_harness(const Options& o) {
  sj_harness_options opts;
  sj_harness_options_init(&opts);
  opts.config_path = o.config.empty() ? nullptr : o.config.c_str();
  opts.backend = o.backend.c_str();
  opts.transcript_path = o.transcript.empty() ? nullptr : o.transcript.c_str();
  opts.mock_rules_path = o.mock_rules.empty() ? nullptr : o.mock_rules.c_str();
  opts.cache_dir = o.cache.empty() ? nullptr : o.cache.c_str();
  opts.workers = o.workers;
  opts.deterministic = o.deterministic ? 1 : 0;
  opts.drop_partial_pairs = o.drop_partial_pairs ? 1 : -1;
  sj_harness* h = nullptr;
  check(sj_harness_create(&opts, &h));
  return HarnessPtr(h);
}

int cmd_validate(const Options& o) {
  auto corpus = load_corpus(o);
  char* text = nullptr;
  std::size_t violations = 0;
  check(sj_corpus_validate(corpus.get(), format_of(o), &text, &violations));
  write_output(o, text);
  return violations == 0 ? kExitOk : kExitDomain;
}

int cmd_double_standard(const Options& o) {
  auto corpus = load_corpus(o);
  char* text = nullptr;
  check(sj_corpus_double_standards(corpus.get(), o.threshold, o.workers == 0 ? 1 : o.workers,
                                   format_of(o), &text, nullptr));
  write_output(o, text);
  return kExitOk;
}

int cmd_run(const Options& o) {
  auto corpus = load_corpus(o);
  auto harness = make_harness(o);
  const std::string run_id = o.run_id.empty() ? "run-" + o.tier : o.run_id;
  char* text = nullptr;
  check(sj_harness_run(harness.get(), corpus.get(), o.tier.c_str(), run_id.c_str(), format_of(o), &text));
  write_output(o, text);
  return kExitOk;
}

int cmd_tiers(const Options& o) {
  auto corpus = load_corpus(o);
  auto harness = make_harness(o);
  const std::string run_id = o.run_id.empty() ? "tiers" : o.run_id;
  char* text = nullptr;
  check(sj_harness_tiers(harness.get(), corpus.get(), run_id.c_str(), format_of(o), &text));
  write_output(o, text);
  return kExitOk;
}

int cmd_matrix(const Options& o) {
  auto corpus = load_corpus(o);
  auto harness = make_harness(o);
  const std::string run_id = o.run_id.empty() ? "matrix" : o.run_id;
  char* text = nullptr;
  check(sj_harness_matrix(harness.get(), corpus.get(), o.engineers.c_str(), o.judges.c_str(),
                          run_id.c_str(), format_of(o), &text));
  write_output(o, text);
  return kExitOk;
}

int cmd_score(const Options& o) {
  char* text = nullptr;
  check(sj_score_run(o.artifacts.c_str(), o.strict_denominator ? 1 : 0, o.cwe_top, format_of(o), &text));
  write_output(o, text);
  return kExitOk;
}

int cmd_corrections(const Options& o) {
  char* text = nullptr;
  check(sj_corrections(o.blind.c_str(), o.feature.c_str(), format_of(o), &text));
  write_output(o, text);
  return kExitOk;
}

int cmd_report(const Options& o) {
  std::ifstream in(o.input, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << o.input << "\n";
    return kExitDomain;
  }
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char* text = nullptr;
  check(sj_report_render(content.c_str(), format_of(o), &text));
  write_output(o, text);
  return kExitOk;
}

int cmd_replay_verify(const Options& o) {
  char* text = nullptr;
  const sj_status status = sj_replay_verify(o.transcript.c_str(), &text);
  if (text != nullptr) write_output(o, text);
  check(status);
  return kExitOk;
}

extern "C" void on_signal(int) { sj_request_interrupt(); }

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"specjudge: paired vulnerability-detection evaluation harness"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"table", "machine"}));
    sub->add_option("--out", o.out, "Write the report here instead of stdout");
  };
  auto corpus_opts = [&](CLI::App* sub) {
    sub->add_option("--corpus", o.corpus, "Line-delimited corpus file")->required();
    sub->add_option("--mapping", o.mapping, "Field mapping JSON file");
  };
  auto harness_opts = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Harness config with model profiles");
    sub->add_option("--cache", o.cache, "Cache directory for responses and runs");
    sub->add_option("--backend", o.backend, "live|replay|mock")
        ->check(CLI::IsMember({"live", "replay", "mock"}));
    sub->add_option("--transcript", o.transcript, "Transcript file (replay source or record target)");
    sub->add_option("--mock-rules", o.mock_rules, "Rules file for the mock backend");
    sub->add_option("--workers", o.workers, "Pairs in flight")->check(CLI::PositiveNumber);
    sub->add_option("--run-id", o.run_id, "Run name");
    sub->add_flag("--deterministic", o.deterministic, "Omit timestamps from written files");
    sub->add_flag("--drop-partial-pairs", o.drop_partial_pairs,
                  "Drop the surviving verdict of a pair whose other judge call failed");
  };

  auto* validate = app.add_subcommand("validate", "Check corpus pairing and labels");
  common(validate);
  corpus_opts(validate);

  auto* dstd = app.add_subcommand("double-standard", "Find near-identical code with opposite labels");
  common(dstd);
  corpus_opts(dstd);
  dstd->add_option("--threshold", o.threshold, "Similarity threshold")->check(CLI::Range(0.0, 1.0));
  dstd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "Run one tier over a corpus");
  common(run);
  corpus_opts(run);
  harness_opts(run);
  run->add_option("--tier", o.tier, "raw|blind|feature")
      ->required()
      ->check(CLI::IsMember({"raw", "blind", "feature"}));

  auto* tiers = app.add_subcommand("tiers", "Run RAW, BLIND and FEATURE");
  common(tiers);
  corpus_opts(tiers);
  harness_opts(tiers);

  auto* matrix = app.add_subcommand("matrix", "Cross-model FEATURE runs");
  common(matrix);
  corpus_opts(matrix);
  harness_opts(matrix);
  matrix->add_option("--engineers", o.engineers, "Comma-separated reverse-engineer profiles")->required();
  matrix->add_option("--judges", o.judges, "Comma-separated judge profiles")->required();

  auto* score = app.add_subcommand("score", "Score a persisted run");
  common(score);
  score->add_option("--artifacts", o.artifacts, "Run directory")->required();
  score->add_flag("--strict-denominator", o.strict_denominator, "Pair-Correct over all pairs");
  score->add_option("--cwe-top", o.cwe_top, "Fold CWE rows beyond this many into Others");

  auto* corrections = app.add_subcommand("corrections", "Compare a BLIND run with a FEATURE run");
  common(corrections);
  corrections->add_option("--blind", o.blind, "BLIND run directory")->required();
  corrections->add_option("--feature", o.feature, "FEATURE run directory")->required();

  auto* report = app.add_subcommand("report", "Re-render a machine-format report");
  common(report);
  report->add_option("--input", o.input, "Machine report file")->required();

  auto* verify = app.add_subcommand("replay-verify", "Recompute transcript digests");
  common(verify);
  verify->add_option("--transcript", o.transcript, "Transcript file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (sj_set_log_level(o.log_level.c_str()) != SJ_OK) {
    std::cerr << "error: " << sj_last_error() << "\n";
    return kExitUsage;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*validate) return cmd_validate(o);
    if (*dstd) return cmd_double_standard(o);
    if (*run) return cmd_run(o);
    if (*tiers) return cmd_tiers(o);
    if (*matrix) return cmd_matrix(o);
    if (*score) return cmd_score(o);
    if (*corrections) return cmd_corrections(o);
    if (*report) return cmd_report(o);
    if (*verify) return cmd_replay_verify(o);
  } catch (const DomainFailure& f) {
    std::cerr << "error: " << sj_last_error() << "\n";
    return f.status == SJ_ERR_INVALID_ARGUMENT ? kExitUsage : kExitDomain;
  }
  return kExitUsage;
}
