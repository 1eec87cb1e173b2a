// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "specjudge/dataset.hpp"
#include "specjudge/pipeline.hpp"

namespace specjudge {

/// Positive class is vulnerable ("bad").
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws Error(kMissingVerdict) when any record lacks a verdict.
ConfusionMatrix confusion(const std::vector<SampleRecord>& samples);

/// Records that carry a verdict.
std::vector<SampleRecord> judged_samples(const std::vector<SampleRecord>& samples);

struct ScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  /// Set when the metric's denominator was zero; the value is then 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  std::size_t pair_correct = 0;
  std::size_t pairs_valid = 0;
  double pc_rate = 0.0;
  bool pc_rate_undefined = false;
  ConfusionMatrix confusion;

  bool operator==(const ScoreReport&) const = default;
};

ScoreReport score(const ConfusionMatrix& cm, std::size_t pair_correct = 0,
                  std::size_t pairs_valid = 0);

struct PairCorrect {
  std::size_t count = 0;
  std::size_t pairs_valid = 0;
  std::size_t pairs_total = 0;
};

/// Complete pairs judged (bad, good) on (vulnerable, patched). Invalidated
/// pairs are excluded from count and pairs_valid but included in pairs_total.
PairCorrect pair_correct(const std::vector<PairArtifact>& artifacts);

/// Sample-level scores over judged samples plus Pair-Correct. With
/// strict_denominator the rate is taken over pairs_total instead of pairs_valid.
ScoreReport score_run(const RunResult& run, bool strict_denominator = false);

// ---------------------------------------------------------------------------

enum class ErrorKind { kFalsePositive, kFalseNegative };

struct SampleError {
  std::string sample_id;
  std::vector<std::string> cwe_ids;
  ErrorKind kind = ErrorKind::kFalsePositive;
};

std::vector<SampleError> sample_errors(const std::vector<SampleRecord>& samples);

struct CweRow {
  std::string cwe_id;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const CweRow&) const = default;
};

inline constexpr std::string_view kOthersRow = "Others";
inline constexpr std::string_view kNoCweRow = "(none)";

/// Rows are ordered by fp + fn descending, then CWE id. A sample with several
/// CWEs counts once in each row, so column sums equal the (sample, CWE)
/// incidence counts; a sample without CWE ids lands in "(none)".
struct CweErrorBreakdown {
  std::vector<CweRow> rows;
  std::size_t samples_fp = 0;
  std::size_t samples_fn = 0;

  bool operator==(const CweErrorBreakdown&) const = default;
};

/// top_n > 0 keeps the top_n rows and folds the rest into "Others".
CweErrorBreakdown cwe_breakdown(const std::vector<SampleError>& errors, std::size_t top_n = 0);

struct CorrectionReport {
  std::size_t corrected = 0;  // blind wrong, feature right
  std::size_t regressed = 0;  // blind right, feature wrong
  std::size_t unchanged = 0;
  std::size_t shared = 0;
  double ratio = 0.0;
  bool ratio_undefined = false;  // regressed == 0
  std::size_t only_blind = 0;
  std::size_t only_feature = 0;

  bool operator==(const CorrectionReport&) const = default;
};

/// Compares per-sample correctness over the judged samples present in both
/// runs. Throws Error(kDisjointRuns) when they share no sample.
CorrectionReport correction_analysis(const std::vector<SampleRecord>& blind,
                                     const std::vector<SampleRecord>& feature);

// ---------------------------------------------------------------------------
// Reports

struct NamedScore {
  std::string name;
  ScoreReport score;
  bool operator==(const NamedScore&) const = default;
};

struct TierRow {
  std::string label;
  std::optional<double> raw;
  std::optional<double> blind;
  std::optional<double> feature;
  bool operator==(const TierRow&) const = default;
};

struct MatrixEntry {
  std::string engineer;
  std::string judge;
  std::optional<double> f1;
  std::optional<std::string> error;
  bool operator==(const MatrixEntry&) const = default;
};

struct Report {
  std::vector<NamedScore> scores;
  std::vector<TierRow> tiers;
  std::vector<MatrixEntry> matrix;
  std::optional<CweErrorBreakdown> cwe;
  std::optional<CorrectionReport> corrections;
  std::optional<ValidationReport> validation;
  std::optional<std::vector<DoubleStandardHit>> double_standards;
};

enum class ReportFormat { kTable, kMachine };

ReportFormat report_format_from_string(std::string_view s);

/// Deterministic rendering. The table form prints fixed 3-decimal values;
/// the machine form is one JSON object per line with a "kind" field.
std::string render_report(const Report& report, ReportFormat format);

/// Inverse of the machine form.
Report read_machine_report(std::string_view text);

}  // namespace specjudge
