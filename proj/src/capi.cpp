// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/specjudge.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "specjudge/agents.hpp"
#include "specjudge/backend.hpp"
#include "specjudge/dataset.hpp"
#include "specjudge/error.hpp"
#include "specjudge/gherkin.hpp"
#include "specjudge/metrics.hpp"
#include "specjudge/pipeline.hpp"
#include "util.hpp"

using namespace specjudge;
namespace fs = std::filesystem;

struct sj_corpus {
  Corpus corpus;
};

struct sj_harness {
  HarnessConfig config;
  std::unique_ptr<ChatBackend> backend;
  MockBackend* mock = nullptr;
  std::shared_ptr<Transcript> transcript;
  fs::path cache_dir;
  bool deterministic = true;
};

namespace {

thread_local std::string g_last_error;

void install_stderr_logger() {
  static const bool installed = [] {
    auto logger = spdlog::stderr_color_mt("specjudge");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    return true;
  }();
  (void)installed;
}

sj_status status_of(ErrorCode code) { return static_cast<sj_status>(static_cast<int>(code) + 1); }

template <typename Fn>
sj_status guard(Fn&& fn) {
  install_stderr_logger();
  g_last_error.clear();
  try {
    fn();
    return SJ_OK;
  } catch (const Error& e) {
    g_last_error = fmt::format("{}: {}", to_string(e.code()), e.what());
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = fmt::format("ParseError: {}", e.what());
    return SJ_ERR_PARSE;
  } catch (const fs::filesystem_error& e) {
    g_last_error = fmt::format("FileError: {}", e.what());
    return SJ_ERR_FILE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SJ_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = fmt::format("internal error: {}", e.what());
    return SJ_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown internal error";
    return SJ_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void emit(char** out, const std::string& s) {
  require(out, "out");
  *out = dup_string(s);
}

ReportFormat format_of(sj_format f) {
  if (f == SJ_FORMAT_TABLE) return ReportFormat::kTable;
  if (f == SJ_FORMAT_MACHINE) return ReportFormat::kMachine;
  throw Error(ErrorCode::kInvalidArgument, "unknown report format");
}

std::vector<std::string> split_csv(const char* csv) {
  std::vector<std::string> out;
  std::string_view rest(csv);
  while (true) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

HarnessConfig default_config() {
  return HarnessConfig::from_json({{"profiles", {{"default", nlohmann::json::object()}}},
                                   {"agents",
                                    {{"slicer", "default"},
                                     {"reverse_engineer", "default"},
                                     {"judge", "default"}}}});
}

std::unique_ptr<HttpBackend> make_http_backend(const HarnessConfig& config) {
  auto endpoint = [](const ModelProfile& p) {
    return HttpBackend::Endpoint{p.base_url, p.token_env, std::chrono::seconds(p.timeout_s)};
  };
  auto http = std::make_unique<HttpBackend>(endpoint(config.profile(config.judge_profile)));
  for (const auto& [name, p] : config.profiles) {
    if (p.base_url.empty()) {
      throw Error(ErrorCode::kConfig, "profile " + name + " has no base_url for the live backend");
    }
    http->add_route(p.params.model_name, endpoint(p));
  }
  return http;
}

Report run_report(const RunResult& run) {
  Report r;
  r.scores.push_back({run.run_id, score_run(run)});
  r.cwe = cwe_breakdown(sample_errors(run.samples));
  return r;
}

}  // namespace

extern "C" {

const char* sj_version(void) { return "0.1.0"; }

const char* sj_status_name(sj_status status) {
  switch (status) {
    case SJ_OK: return "OK";
    case SJ_ERR_INTERNAL: return "InternalError";
    default: break;
  }
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(ErrorCode::kInterrupted)) return "Unknown";
  static thread_local std::string name;
  name = std::string(to_string(static_cast<ErrorCode>(code)));
  return name.c_str();
}

const char* sj_last_error(void) { return g_last_error.c_str(); }

void sj_string_free(char* s) { std::free(s); }

sj_status sj_set_log_level(const char* level) {
  return guard([&] {
    require(level, "level");
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && std::string_view(level) != "off") {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown log level '{}'", level));
    }
    spdlog::set_level(lvl);
  });
}

void sj_request_interrupt(void) { request_interrupt(); }

// ---------------------------------------------------------------------------

sj_status sj_corpus_load(const char* path, const char* mapping_path, sj_corpus** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    const FieldMapping mapping = mapping_path ? FieldMapping::load(mapping_path) : FieldMapping{};
    auto handle = std::make_unique<sj_corpus>();
    handle->corpus = load_corpus(path, mapping);
    *out = handle.release();
  });
}

void sj_corpus_free(sj_corpus* corpus) { delete corpus; }

size_t sj_corpus_pair_count(const sj_corpus* corpus) {
  return corpus ? corpus->corpus.pairs.size() : 0;
}

sj_status sj_corpus_digest(const sj_corpus* corpus, char** out) {
  return guard([&] {
    require(corpus, "corpus");
    emit(out, corpus_digest(corpus->corpus));
  });
}

sj_status sj_corpus_validate(const sj_corpus* corpus, sj_format format, char** out,
                             size_t* violations) {
  return guard([&] {
    require(corpus, "corpus");
    Report r;
    r.validation = validate_corpus(corpus->corpus);
    if (violations) *violations = r.validation->violations.size();
    emit(out, render_report(r, format_of(format)));
  });
}

sj_status sj_corpus_double_standards(const sj_corpus* corpus, double threshold, unsigned workers,
                                     sj_format format, char** out, size_t* hits) {
  return guard([&] {
    require(corpus, "corpus");
    Report r;
    r.double_standards = find_double_standards(corpus->corpus, threshold, workers == 0 ? 1 : workers);
    if (hits) *hits = r.double_standards->size();
    emit(out, render_report(r, format_of(format)));
  });
}

// ---------------------------------------------------------------------------

sj_status sj_similarity(const char* a, size_t a_len, const char* b, size_t b_len, double* out) {
  return guard([&] {
    require(out, "out");
    if (a_len > 0) require(a, "a");
    if (b_len > 0) require(b, "b");
    *out = sequence_similarity(std::string_view(a ? a : "", a_len), std::string_view(b ? b : "", b_len));
  });
}

sj_status sj_slicing_reduction(const char* original, size_t original_len, const char* sliced,
                               size_t sliced_len, double* percent) {
  return guard([&] {
    require(percent, "percent");
    if (original_len > 0) require(original, "original");
    if (sliced_len > 0) require(sliced, "sliced");
    *percent = slicing_reduction(std::string_view(original ? original : "", original_len),
                                 std::string_view(sliced ? sliced : "", sliced_len))
                   .percent;
  });
}

sj_status sj_feature_render(const char* text, char** out) {
  return guard([&] {
    require(text, "text");
    emit(out, gherkin::render_feature(gherkin::parse_feature(text)));
  });
}

sj_status sj_feature_lint(const char* text, char** out) {
  return guard([&] {
    require(text, "text");
    emit(out, gherkin::findings_to_jsonl(gherkin::lint_feature(gherkin::parse_feature(text))));
  });
}

// ---------------------------------------------------------------------------

void sj_harness_options_init(sj_harness_options* options) {
  if (options == nullptr) return;
  *options = sj_harness_options{};
  options->backend = "mock";
  options->deterministic = 1;
  options->drop_partial_pairs = -1;
}

sj_status sj_harness_create(const sj_harness_options* options, sj_harness** out) {
  return guard([&] {
    require(options, "options");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<sj_harness>();
    h->config = options->config_path ? HarnessConfig::load(options->config_path) : default_config();
    if (options->workers > 0) h->config.workers = options->workers;
    if (options->drop_partial_pairs >= 0) h->config.drop_partial_pairs = options->drop_partial_pairs != 0;
    h->deterministic = options->deterministic != 0;
    if (options->cache_dir) h->cache_dir = options->cache_dir;

    const std::string kind = options->backend ? options->backend : "mock";
    const char* transcript = options->transcript_path;
    if (kind == "live") {
      h->backend = make_http_backend(h->config);
      h->transcript = transcript ? Transcript::open(transcript, h->deterministic)
                                 : std::make_shared<Transcript>();
    } else if (kind == "replay") {
      h->backend = std::make_unique<OfflineBackend>();
      h->transcript = transcript ? Transcript::load(transcript) : std::make_shared<Transcript>();
    } else if (kind == "mock") {
      if (!options->mock_rules_path) {
        throw Error(ErrorCode::kInvalidArgument, "the mock backend needs a rules file");
      }
      auto mock = MockBackend::load(options->mock_rules_path);
      h->mock = mock.get();
      h->backend = std::move(mock);
      h->transcript = transcript ? Transcript::open(transcript, h->deterministic)
                                 : std::make_shared<Transcript>();
    } else {
      throw Error(ErrorCode::kInvalidArgument, "backend must be live, replay or mock, got '" + kind + "'");
    }
    *out = h.release();
  });
}

void sj_harness_free(sj_harness* harness) { delete harness; }

sj_status sj_harness_run(sj_harness* harness, const sj_corpus* corpus, const char* tier,
                         const char* run_id, sj_format format, char** out) {
  return guard([&] {
    require(harness, "harness");
    require(corpus, "corpus");
    require(tier, "tier");
    require(run_id, "run_id");
    const ReportFormat fmt = format_of(format);
    RunConfig cfg = harness->config.run_config(tier_from_string(tier), run_id, harness->cache_dir);
    cfg.deterministic = harness->deterministic;
    const RunResult run = run_corpus(corpus->corpus, cfg, *harness->backend, harness->transcript);
    emit(out, render_report(run_report(run), fmt));
  });
}

sj_status sj_harness_tiers(sj_harness* harness, const sj_corpus* corpus, const char* run_id,
                           sj_format format, char** out) {
  return guard([&] {
    require(harness, "harness");
    require(corpus, "corpus");
    require(run_id, "run_id");
    const ReportFormat fmt = format_of(format);
    const TierResults t = run_tiers(corpus->corpus, harness->config, *harness->backend, run_id,
                                    harness->cache_dir, harness->deterministic, harness->transcript);
    Report r;
    TierRow row{harness->config.judge_profile, std::nullopt, std::nullopt, std::nullopt};
    for (const RunResult* run : {&t.raw, &t.blind, &t.feature}) {
      const ScoreReport s = score_run(*run);
      r.scores.push_back({run->run_id, s});
      std::optional<double>& slot =
          run->tier == Tier::kRaw ? row.raw : run->tier == Tier::kBlind ? row.blind : row.feature;
      slot = s.f1;
    }
    r.tiers.push_back(row);
    try {
      r.corrections = correction_analysis(t.blind.samples, t.feature.samples);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDisjointRuns) throw;
      spdlog::warn("no corrections: {}", e.what());
    }
    emit(out, render_report(r, fmt));
  });
}

sj_status sj_harness_matrix(sj_harness* harness, const sj_corpus* corpus,
                            const char* engineer_profiles, const char* judge_profiles,
                            const char* run_id, sj_format format, char** out) {
  return guard([&] {
    require(harness, "harness");
    require(corpus, "corpus");
    require(engineer_profiles, "engineer_profiles");
    require(judge_profiles, "judge_profiles");
    require(run_id, "run_id");
    const ReportFormat fmt = format_of(format);
    const auto cells = run_matrix(corpus->corpus, split_csv(engineer_profiles),
                                  split_csv(judge_profiles), harness->config, *harness->backend,
                                  run_id, harness->cache_dir, harness->deterministic,
                                  harness->transcript);
    Report r;
    for (const auto& cell : cells) {
      MatrixEntry e{cell.engineer_profile, cell.judge_profile, std::nullopt, cell.error};
      if (cell.result) {
        const ScoreReport s = score_run(*cell.result);
        e.f1 = s.f1;
        r.scores.push_back({cell.result->run_id, s});
      }
      r.matrix.push_back(std::move(e));
    }
    emit(out, render_report(r, fmt));
  });
}

sj_status sj_harness_call_counts(const sj_harness* harness, char** out) {
  return guard([&] {
    require(harness, "harness");
    if (harness->mock == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "call counts are only kept by the mock backend");
    }
    emit(out, nlohmann::json(harness->mock->call_counts()).dump());
  });
}

// ---------------------------------------------------------------------------

sj_status sj_score_run(const char* run_dir, int strict_denominator, size_t cwe_top_n,
                       sj_format format, char** out) {
  return guard([&] {
    require(run_dir, "run_dir");
    const ReportFormat fmt = format_of(format);
    const RunResult run = load_run(run_dir);
    Report r;
    r.scores.push_back({run.run_id, score_run(run, strict_denominator != 0)});
    r.cwe = cwe_breakdown(sample_errors(run.samples), cwe_top_n);
    emit(out, render_report(r, fmt));
  });
}

sj_status sj_corrections(const char* blind_run_dir, const char* feature_run_dir, sj_format format,
                         char** out) {
  return guard([&] {
    require(blind_run_dir, "blind_run_dir");
    require(feature_run_dir, "feature_run_dir");
    const ReportFormat fmt = format_of(format);
    Report r;
    r.corrections = correction_analysis(load_samples(blind_run_dir), load_samples(feature_run_dir));
    emit(out, render_report(r, fmt));
  });
}

sj_status sj_report_render(const char* machine_report, sj_format format, char** out) {
  return guard([&] {
    require(machine_report, "machine_report");
    emit(out, render_report(read_machine_report(machine_report), format_of(format)));
  });
}

sj_status sj_replay_verify(const char* transcript_path, char** out) {
  return guard([&] {
    require(transcript_path, "transcript_path");
    const TranscriptCheck check = verify_transcript(transcript_path);
    std::string text = fmt::format("exchanges: {}\nmismatched digests: {}\n", check.exchanges,
                                   check.mismatched.size());
    for (const auto& d : check.mismatched) text += "  " + d + "\n";
    emit(out, text);
    if (!check.mismatched.empty()) {
      throw Error(ErrorCode::kDigestConflict,
                  fmt::format("{} stored digest(s) do not match their requests", check.mismatched.size()));
    }
  });
}

}  // extern "C"
