// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/gherkin.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

#include "util.hpp"

namespace specjudge::gherkin {

std::string_view to_string(Keyword keyword) {
  switch (keyword) {
    case Keyword::kGiven: return "Given";
    case Keyword::kWhen: return "When";
    case Keyword::kThen: return "Then";
    case Keyword::kAnd: return "And";
    case Keyword::kBut: return "But";
  }
  return "?";
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kNoFeatureHeader: return "NoFeatureHeader";
    case ParseErrorKind::kEmptyFeature: return "EmptyFeature";
    case ParseErrorKind::kOrphanStep: return "OrphanStep";
    case ParseErrorKind::kUnknownKeyword: return "UnknownKeyword";
    case ParseErrorKind::kMultipleFeatures: return "MultipleFeatures";
  }
  return "?";
}

std::string_view to_string(Severity severity) {
  return severity == Severity::kError ? "error" : "warning";
}

namespace {

std::string describe(ParseErrorKind kind, std::size_t line, const std::string& detail) {
  std::string msg(to_string(kind));
  if (line > 0) msg += " at line " + std::to_string(line);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

GherkinError::GherkinError(ParseErrorKind kind, std::size_t line, const std::string& detail)
    : Error(ErrorCode::kGherkin, describe(kind, line, detail)), kind_(kind), line_(line) {}

// ---------------------------------------------------------------------------
// Line classification

namespace {

constexpr std::array<std::pair<std::string_view, Keyword>, 5> kStepKeywords = {{
    {"Given", Keyword::kGiven},
    {"When", Keyword::kWhen},
    {"Then", Keyword::kThen},
    {"And", Keyword::kAnd},
    {"But", Keyword::kBut},
}};

constexpr std::array<std::string_view, 11> kUnsupported = {
    "Background:", "Scenario Outline:", "Scenario Template:", "Examples:", "Scenarios:",
    "Rule:",       "Example:",          "@",                  "\"\"\"",    "```",
    "|",
};

enum class LineKind { kBlank, kComment, kFeature, kScenario, kStep, kUnsupported, kText };

struct Classified {
  LineKind kind = LineKind::kText;
  Keyword keyword = Keyword::kGiven;
  std::string_view rest;
};

Classified classify(std::string_view content) {
  if (content.empty()) return {LineKind::kBlank, Keyword::kGiven, {}};
  if (content.front() == '#') return {LineKind::kComment, Keyword::kGiven, {}};
  if (content.starts_with("Feature:")) {
    return {LineKind::kFeature, {}, trim(content.substr(8))};
  }
  if (content.starts_with("Scenario:")) {
    return {LineKind::kScenario, {}, trim(content.substr(9))};
  }
  for (const auto& [word, keyword] : kStepKeywords) {
    if (content.size() > word.size() && content.starts_with(word) &&
        content[word.size()] == ' ') {
      return {LineKind::kStep, keyword, trim(content.substr(word.size() + 1))};
    }
  }
  for (std::string_view prefix : kUnsupported) {
    if (content.starts_with(prefix)) return {LineKind::kUnsupported, {}, content};
  }
  return {LineKind::kText, {}, content};
}

}  // namespace

FeatureSpec parse_feature(std::string_view text) {
  enum class State { kPreamble, kNarrative, kScenario };
  State state = State::kPreamble;
  FeatureSpec spec;
  std::vector<std::string> narrative;
  std::size_t scenario_line = 0;

  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view content = trim(lines[i]);
    const Classified c = classify(content);
    switch (c.kind) {
      case LineKind::kBlank:
      case LineKind::kComment:
        continue;
      case LineKind::kFeature:
        if (state != State::kPreamble) {
          throw GherkinError(ParseErrorKind::kMultipleFeatures, line_no,
                             "a document holds exactly one Feature");
        }
        spec.title = std::string(c.rest);
        state = State::kNarrative;
        continue;
      default:
        break;
    }
    if (state == State::kPreamble) {
      throw GherkinError(ParseErrorKind::kNoFeatureHeader, line_no,
                         "expected 'Feature:' before '" + std::string(content) + "'");
    }
    switch (c.kind) {
      case LineKind::kScenario:
        if (state == State::kScenario && spec.scenarios.back().steps.empty()) {
          throw GherkinError(ParseErrorKind::kEmptyFeature, scenario_line, "scenario has no steps");
        }
        spec.scenarios.push_back({std::string(c.rest), {}});
        scenario_line = line_no;
        state = State::kScenario;
        break;
      case LineKind::kStep:
        if (state != State::kScenario) {
          throw GherkinError(ParseErrorKind::kOrphanStep, line_no,
                             "step outside of a Scenario: '" + std::string(content) + "'");
        }
        spec.scenarios.back().steps.push_back({c.keyword, std::string(c.rest)});
        break;
      case LineKind::kUnsupported:
        throw GherkinError(ParseErrorKind::kUnknownKeyword, line_no,
                           "unsupported construct '" + std::string(content) + "'");
      case LineKind::kText:
        if (state == State::kScenario) {
          throw GherkinError(ParseErrorKind::kUnknownKeyword, line_no,
                             "not a step: '" + std::string(content) + "'");
        }
        narrative.emplace_back(content);
        break;
      default:
        break;
    }
  }

  if (state == State::kPreamble) {
    throw GherkinError(ParseErrorKind::kNoFeatureHeader, 0, "no 'Feature:' line found");
  }
  if (spec.scenarios.empty()) {
    throw GherkinError(ParseErrorKind::kEmptyFeature, 0, "feature has no scenarios");
  }
  if (spec.scenarios.back().steps.empty()) {
    throw GherkinError(ParseErrorKind::kEmptyFeature, scenario_line, "scenario has no steps");
  }
  spec.narrative = join(narrative, "\n");
  return spec;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidSpec, "cannot render feature: " + what);
}

void check_single_line(std::string_view s, const char* what, bool allow_empty) {
  if (!allow_empty && s.empty()) invalid(std::string(what) + " is empty");
  if (s.find('\n') != std::string_view::npos) {
    invalid(std::string(what) + " spans several lines");
  }
  if (trim(s) != s) invalid(std::string(what) + " has surrounding whitespace");
}

}  // namespace

std::string render_feature(const FeatureSpec& spec) {
  check_single_line(spec.title, "feature title", true);
  if (spec.scenarios.empty()) invalid("feature has no scenarios");

  std::string out = spec.title.empty() ? "Feature:\n" : "Feature: " + spec.title + "\n";
  if (!spec.narrative.empty()) {
    std::size_t start = 0;
    while (start <= spec.narrative.size()) {
      std::size_t end = spec.narrative.find('\n', start);
      if (end == std::string::npos) end = spec.narrative.size();
      const std::string_view line = std::string_view(spec.narrative).substr(start, end - start);
      check_single_line(line, "narrative line", false);
      if (classify(line).kind != LineKind::kText) {
        invalid("narrative line would parse as a keyword: '" + std::string(line) + "'");
      }
      out += "  ";
      out += line;
      out += '\n';
      start = end + 1;
    }
  }
  for (const Scenario& scenario : spec.scenarios) {
    check_single_line(scenario.title, "scenario title", true);
    if (scenario.steps.empty()) invalid("scenario '" + scenario.title + "' has no steps");
    out += scenario.title.empty() ? "\n  Scenario:\n" : "\n  Scenario: " + scenario.title + "\n";
    for (const Step& step : scenario.steps) {
      check_single_line(step.text, "step text", false);
      out += "    ";
      out += to_string(step.keyword);
      out += ' ';
      out += step.text;
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linting

const std::vector<LintRule>& lint_rules() {
  static const std::vector<LintRule> rules = {
      {"and-first-step", Severity::kError, "a scenario must open with Given, When or Then"},
      {"no-then-step", Severity::kError, "every scenario needs at least one Then step"},
      {"vague-term", Severity::kWarning,
       "vague wording without a number, identifier or comparison to pin it down"},
      {"failure-phrasing", Severity::kWarning,
       "step describes how the flawed code fails instead of the required behavior"},
      {"scenario-count", Severity::kWarning, "too many scenarios for a minimal contract"},
  };
  return rules;
}

const LintRule* find_rule(std::string_view id) {
  for (const auto& rule : lint_rules()) {
    if (rule.id == id) return &rule;
  }
  return nullptr;
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Case-insensitive whole-word search; `needle` must already be lower-case.
bool contains_word(std::string_view haystack_lower, std::string_view needle) {
  if (needle.empty()) return false;
  std::size_t pos = 0;
  while ((pos = haystack_lower.find(needle, pos)) != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word_char(haystack_lower[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right_ok = end == haystack_lower.size() || !is_word_char(haystack_lower[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

bool looks_like_identifier(std::string_view token) {
  if (token.find_first_of("_`[(") != std::string_view::npos) return true;
  if (token.find("->") != std::string_view::npos || token.find("::") != std::string_view::npos) {
    return true;
  }
  std::size_t upper = 0;
  std::size_t letters = 0;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const auto c = static_cast<unsigned char>(token[i]);
    if (std::isalpha(c)) ++letters;
    if (std::isupper(c)) {
      ++upper;
      if (i > 0 && std::islower(static_cast<unsigned char>(token[i - 1]))) return true;
    }
  }
  return letters >= 2 && upper == letters;
}

// A step counts as precise when it names something concrete: a number, a code
// identifier, or a comparison.
bool is_precise(std::string_view text) {
  if (std::any_of(text.begin(), text.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return true;
  }
  if (text.find_first_of("<>=") != std::string_view::npos) return true;
  if (text.find("!=") != std::string_view::npos) return true;
  const std::string lower = to_lower(text);
  for (std::string_view phrase : {"less than", "greater than", "at most", "at least",
                                  "equal to", "exceeds", "exceed", "within"}) {
    if (contains_word(lower, phrase)) return true;
  }
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(' ', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(start, end - start);
    while (!token.empty() && std::string_view(".,;:!?\"'").find(token.back()) != std::string_view::npos) {
      token.remove_suffix(1);
    }
    if (looks_like_identifier(token)) return true;
    start = end + 1;
  }
  return false;
}

LintFinding make_finding(std::string_view rule_id, std::optional<std::size_t> scenario,
                         std::string message) {
  const LintRule* rule = find_rule(rule_id);
  return {std::string(rule_id), rule->severity, scenario, std::move(message)};
}

}  // namespace

std::vector<LintFinding> lint_feature(const FeatureSpec& spec, const LintConfig& config) {
  std::vector<LintFinding> findings;
  for (std::size_t i = 0; i < spec.scenarios.size(); ++i) {
    const Scenario& scenario = spec.scenarios[i];
    const std::string label = "scenario '" + scenario.title + "'";
    if (!scenario.steps.empty()) {
      const Keyword first = scenario.steps.front().keyword;
      if (first == Keyword::kAnd || first == Keyword::kBut) {
        findings.push_back(make_finding("and-first-step", i,
                                        label + " opens with '" + std::string(to_string(first)) +
                                            "'"));
      }
    }
    const bool has_then = std::any_of(scenario.steps.begin(), scenario.steps.end(),
                                      [](const Step& s) { return s.keyword == Keyword::kThen; });
    if (!has_then) {
      findings.push_back(make_finding("no-then-step", i, label + " has no Then step"));
    }
    for (const Step& step : scenario.steps) {
      const std::string lower = to_lower(step.text);
      for (const auto& word : config.vague_words) {
        if (contains_word(lower, to_lower(word)) && !is_precise(step.text)) {
          findings.push_back(make_finding(
              "vague-term", i, label + " step '" + step.text + "' uses '" + word + "'"));
          break;
        }
      }
    }
    for (const Step& step : scenario.steps) {
      const std::string lower = to_lower(step.text);
      for (const auto& phrase : config.failure_phrases) {
        if (contains_word(lower, to_lower(phrase))) {
          findings.push_back(make_finding("failure-phrasing", i,
                                          label + " step '" + step.text +
                                              "' describes a failure ('" + phrase + "')"));
          break;
        }
      }
    }
  }
  if (spec.scenarios.size() > config.max_scenarios) {
    findings.push_back(make_finding("scenario-count", std::nullopt,
                                    std::to_string(spec.scenarios.size()) +
                                        " scenarios exceed the limit of " +
                                        std::to_string(config.max_scenarios)));
  }
  return findings;
}

std::string findings_to_jsonl(const std::vector<LintFinding>& findings) {
  std::string out;
  for (const auto& f : findings) {
    nlohmann::json j = {{"rule_id", f.rule_id},
                        {"severity", to_string(f.severity)},
                        {"scenario_index", f.scenario_index ? nlohmann::json(*f.scenario_index)
                                                            : nlohmann::json(nullptr)},
                        {"message", f.message}};
    out += dump_compact(j) + "\n";
  }
  return out;
}

}  // namespace specjudge::gherkin
