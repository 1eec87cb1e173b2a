/* SPDX-License-Identifier: Apache-2.0
 * Copyright 2026 The specjudge Authors
 *
 * C interface to the specjudge library.
 *
 * Every fallible call returns an sj_status. On failure a message describing
 * the error is available from sj_last_error() on the same thread until the
 * next call. Strings returned through char** out-parameters are owned by the
 * caller and released with sj_string_free().
 */
#ifndef SPECJUDGE_SPECJUDGE_H_
#define SPECJUDGE_SPECJUDGE_H_

#include <stddef.h>

#if defined(_WIN32)
#if defined(SPECJUDGE_BUILDING_LIBRARY)
#define SJ_API __declspec(dllexport)
#else
#define SJ_API __declspec(dllimport)
#endif
#else
#define SJ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sj_status {
  SJ_OK = 0,
  SJ_ERR_FILE = 1,
  SJ_ERR_PARSE = 2,
  SJ_ERR_SCHEMA = 3,
  SJ_ERR_PAIRING = 4,
  SJ_ERR_GHERKIN = 5,
  SJ_ERR_INVALID_SPEC = 6,
  SJ_ERR_TEMPLATE = 7,
  SJ_ERR_MISSING_PLACEHOLDER = 8,
  SJ_ERR_FORMAT = 9,
  SJ_ERR_EMPTY_SLICE = 10,
  SJ_ERR_VERDICT = 11,
  SJ_ERR_TRANSPORT = 12,
  SJ_ERR_TIMEOUT = 13,
  SJ_ERR_REPLAY_MISS = 14,
  SJ_ERR_EMPTY_RESPONSE = 15,
  SJ_ERR_DIGEST_CONFLICT = 16,
  SJ_ERR_MISSING_VERDICT = 17,
  SJ_ERR_DISJOINT_RUNS = 18,
  SJ_ERR_EMPTY_ORIGINAL = 19,
  SJ_ERR_CONFIG = 20,
  SJ_ERR_INVALID_ARGUMENT = 21,
  SJ_ERR_INTERRUPTED = 22,
  SJ_ERR_INTERNAL = 99
} sj_status;

typedef enum sj_format {
  SJ_FORMAT_TABLE = 0,  /* aligned plain-text tables */
  SJ_FORMAT_MACHINE = 1 /* one JSON object per line */
} sj_format;

SJ_API const char* sj_version(void);
SJ_API const char* sj_status_name(sj_status status);
SJ_API const char* sj_last_error(void);
SJ_API void sj_string_free(char* s);

/* "trace", "debug", "info", "warn", "error" or "off". Logs go to stderr. */
SJ_API sj_status sj_set_log_level(const char* level);

/* Makes running pipeline calls stop after their current pair and return
 * SJ_ERR_INTERRUPTED. Async-signal-safe. */
SJ_API void sj_request_interrupt(void);

/* ------------------------------------------------------------------------ */
/* Corpus */

typedef struct sj_corpus sj_corpus;

/* mapping_path may be NULL for the default field mapping. */
SJ_API sj_status sj_corpus_load(const char* path, const char* mapping_path, sj_corpus** out);
SJ_API void sj_corpus_free(sj_corpus* corpus);
SJ_API size_t sj_corpus_pair_count(const sj_corpus* corpus);
SJ_API sj_status sj_corpus_digest(const sj_corpus* corpus, char** out);

/* Validation report. *violations receives the number of violations. */
SJ_API sj_status sj_corpus_validate(const sj_corpus* corpus, sj_format format, char** out,
                                    size_t* violations);

SJ_API sj_status sj_corpus_double_standards(const sj_corpus* corpus, double threshold,
                                            unsigned workers, sj_format format, char** out,
                                            size_t* hits);

/* ------------------------------------------------------------------------ */
/* Text utilities */

SJ_API sj_status sj_similarity(const char* a, size_t a_len, const char* b, size_t b_len,
                               double* out);

SJ_API sj_status sj_slicing_reduction(const char* original, size_t original_len,
                                      const char* sliced, size_t sliced_len, double* percent);

/* Parses a contract and writes its canonical rendering. */
SJ_API sj_status sj_feature_render(const char* text, char** out);

/* Parses a contract and writes lint findings, one JSON object per line. */
SJ_API sj_status sj_feature_lint(const char* text, char** out);

/* ------------------------------------------------------------------------ */
/* Harness */

typedef struct sj_harness sj_harness;

typedef struct sj_harness_options {
  /* JSON harness config; NULL selects one profile named "default" for every
   * agent. */
  const char* config_path;
  /* "live", "replay" or "mock". */
  const char* backend;
  /* live: transcript file new exchanges are appended to (optional).
   * replay: transcript to answer from (optional when cache_dir holds responses). */
  const char* transcript_path;
  /* mock: rules file. */
  const char* mock_rules_path;
  /* Response cache and run directories; NULL or "" disables persistence. */
  const char* cache_dir;
  /* 0 keeps the configured worker count. */
  unsigned workers;
  /* Nonzero omits timestamps from every written file. */
  int deterministic;
  /* -1 keeps the configured policy, 0 or 1 overrides it. */
  int drop_partial_pairs;
} sj_harness_options;

SJ_API void sj_harness_options_init(sj_harness_options* options);
SJ_API sj_status sj_harness_create(const sj_harness_options* options, sj_harness** out);
SJ_API void sj_harness_free(sj_harness* harness);

/* tier: "raw", "blind" or "feature". The report holds the run's scores. */
SJ_API sj_status sj_harness_run(sj_harness* harness, const sj_corpus* corpus, const char* tier,
                                const char* run_id, sj_format format, char** out);

/* All three tiers, the ablation row and the Blind to Feature corrections. */
SJ_API sj_status sj_harness_tiers(sj_harness* harness, const sj_corpus* corpus,
                                  const char* run_id, sj_format format, char** out);

/* Comma-separated profile names. A failed cell is reported, not returned. */
SJ_API sj_status sj_harness_matrix(sj_harness* harness, const sj_corpus* corpus,
                                   const char* engineer_profiles, const char* judge_profiles,
                                   const char* run_id, sj_format format, char** out);

/* Mock backend only: JSON object of answered calls per stage. */
SJ_API sj_status sj_harness_call_counts(const sj_harness* harness, char** out);

/* ------------------------------------------------------------------------ */
/* Analysis of persisted runs */

/* Scores a run directory. strict_denominator divides Pair-Correct by all
 * pairs; cwe_top_n > 0 folds the CWE tail into "Others". */
SJ_API sj_status sj_score_run(const char* run_dir, int strict_denominator, size_t cwe_top_n,
                              sj_format format, char** out);

SJ_API sj_status sj_corrections(const char* blind_run_dir, const char* feature_run_dir,
                                sj_format format, char** out);

/* Re-renders a machine-format report. */
SJ_API sj_status sj_report_render(const char* machine_report, sj_format format, char** out);

/* Recomputes every request digest in a transcript. Fails with
 * SJ_ERR_DIGEST_CONFLICT when any stored digest differs; *out still receives
 * the summary in that case. */
SJ_API sj_status sj_replay_verify(const char* transcript_path, char** out);

#ifdef __cplusplus
}
#endif

#endif /* SPECJUDGE_SPECJUDGE_H_ */
