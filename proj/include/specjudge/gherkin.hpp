// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "specjudge/error.hpp"

namespace specjudge::gherkin {

// The contract grammar is a strict subset of Gherkin:
//
//   document  := comment* "Feature:" title narrative* scenario+
//   scenario  := "Scenario:" title step+
//   step      := ("Given" | "When" | "Then" | "And" | "But") " " text
//
// Keywords are case-sensitive and must start a line (after indentation).
// Blank lines and lines starting with '#' are ignored everywhere. Background,
// Scenario Outline, Examples, Rule, tags, tables and docstrings are rejected.

enum class Keyword { kGiven, kWhen, kThen, kAnd, kBut };

std::string_view to_string(Keyword keyword);

struct Step {
  Keyword keyword = Keyword::kGiven;
  std::string text;

  bool operator==(const Step&) const = default;
};

struct Scenario {
  std::string title;
  std::vector<Step> steps;

  bool operator==(const Scenario&) const = default;
};

struct FeatureSpec {
  std::string title;
  /// Free lines between the Feature header and the first Scenario, trimmed
  /// and joined with '\n'. Empty when absent.
  std::string narrative;
  std::vector<Scenario> scenarios;

  bool operator==(const FeatureSpec&) const = default;
};

enum class ParseErrorKind {
  kNoFeatureHeader,
  kEmptyFeature,
  kOrphanStep,
  kUnknownKeyword,
  kMultipleFeatures,
};

std::string_view to_string(ParseErrorKind kind);

class GherkinError : public Error {
 public:
  GherkinError(ParseErrorKind kind, std::size_t line, const std::string& detail);

  ParseErrorKind kind() const noexcept { return kind_; }
  /// 1-based line number, 0 when the error concerns the whole document.
  std::size_t line() const noexcept { return line_; }

 private:
  ParseErrorKind kind_;
  std::size_t line_;
};

/// Parses a contract document. Accepts LF or CRLF line endings and ignores
/// trailing whitespace. Never aborts: malformed input raises GherkinError.
FeatureSpec parse_feature(std::string_view text);

/// Canonical rendering: header at column 0, narrative and scenarios indented
/// by two spaces, steps by four, one blank line before each scenario, and a
/// trailing newline. Throws Error(kInvalidSpec) when the spec cannot
/// round-trip through parse_feature.
std::string render_feature(const FeatureSpec& spec);

// ---------------------------------------------------------------------------
// Linting

enum class Severity { kError, kWarning };

std::string_view to_string(Severity severity);

struct LintFinding {
  std::string rule_id;
  Severity severity = Severity::kWarning;
  std::optional<std::size_t> scenario_index;
  std::string message;

  bool operator==(const LintFinding&) const = default;
};

struct LintRule {
  std::string_view id;
  Severity severity;
  std::string_view summary;
};

/// Every rule the linter can emit, in evaluation order.
const std::vector<LintRule>& lint_rules();
const LintRule* find_rule(std::string_view id);

struct LintConfig {
  std::vector<std::string> vague_words = {"properly", "correctly", "safely", "appropriately"};
  std::vector<std::string> failure_phrases = {"crashes", "overflows", "is vulnerable"};
  std::size_t max_scenarios = 6;
};

std::vector<LintFinding> lint_feature(const FeatureSpec& spec, const LintConfig& config = {});

/// One JSON object per line: rule_id, severity, scenario_index (or null), message.
std::string findings_to_jsonl(const std::vector<LintFinding>& findings);

}  // namespace specjudge::gherkin
