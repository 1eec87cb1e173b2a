// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "specjudge/gherkin.hpp"

namespace {

using namespace specjudge;
using namespace specjudge::gherkin;

ParseErrorKind kind_of(std::string_view text) {
  try {
    parse_feature(text);
  } catch (const GherkinError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "parsed unexpectedly: " << text;
  return ParseErrorKind::kEmptyFeature;
}

TEST(GherkinParse, MinimalDocument) {
  const FeatureSpec f = parse_feature(
      "Feature: Bounded copy\n"
      "  The copy must respect the buffer.\n"
      "\n"
      "  Scenario: Oversized length\n"
      "    Given len greater than sizeof(buf)\n"
      "    When copy_in runs\n"
      "    Then it returns -1\n"
      "    And buf is untouched\n");
  EXPECT_EQ(f.title, "Bounded copy");
  EXPECT_EQ(f.narrative, "The copy must respect the buffer.");
  ASSERT_EQ(f.scenarios.size(), 1u);
  ASSERT_EQ(f.scenarios[0].steps.size(), 4u);
  EXPECT_EQ(f.scenarios[0].steps[3].keyword, Keyword::kAnd);
  EXPECT_EQ(f.scenarios[0].steps[3].text, "buf is untouched");
}

TEST(GherkinParse, CrlfCommentsAndTrailingSpace) {
  const FeatureSpec f = parse_feature(
      "# leading comment\r\nFeature: X  \r\n  Scenario: S\r\n    # note\r\n    Given a\r\n    Then b  \r\n");
  EXPECT_EQ(f.title, "X");
  EXPECT_EQ(f.scenarios[0].steps[1].text, "b");
}

TEST(GherkinParse, TypedErrors) {
  EXPECT_EQ(kind_of(""), ParseErrorKind::kNoFeatureHeader);
  EXPECT_EQ(kind_of("Scenario: s\n  Given a\n"), ParseErrorKind::kNoFeatureHeader);
  EXPECT_EQ(kind_of("Feature: f\n"), ParseErrorKind::kEmptyFeature);
  EXPECT_EQ(kind_of("Feature: f\n  Scenario: s\n"), ParseErrorKind::kEmptyFeature);
  EXPECT_EQ(kind_of("Feature: f\n  Given a\n"), ParseErrorKind::kOrphanStep);
  EXPECT_EQ(kind_of("Feature: f\n  Scenario Outline: s\n    Given a\n"),
            ParseErrorKind::kUnknownKeyword);
  EXPECT_EQ(kind_of("Feature: f\n  Scenario: s\n    Given a\n    | x |\n"),
            ParseErrorKind::kUnknownKeyword);
  EXPECT_EQ(kind_of("Feature: f\n  Scenario: s\n    Given a\n    free text\n"),
            ParseErrorKind::kUnknownKeyword);
  EXPECT_EQ(kind_of("Feature: f\n  Scenario: s\n    Given a\nFeature: g\n"),
            ParseErrorKind::kMultipleFeatures);
}

TEST(GherkinParse, ErrorCarriesLine) {
  try {
    parse_feature("Feature: f\n  Scenario: s\n    Given a\n    Examples:\n");
    FAIL();
  } catch (const GherkinError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(GherkinRender, MatchesGoldenFile) {
  const FeatureSpec f = parse_feature(
      "Feature:   Null check before dereference\n"
      "   Callers may pass a NULL session.\n"
      "Scenario: NULL session\n"
      "Given   session is NULL\n"
      "When ssl_free_session is called\n"
      "Then the function returns without dereferencing session\n"
      "  Scenario: Valid session\n"
      "  Given a session with refcount 1\n"
      "  When ssl_free_session is called\n"
      "  Then refcount reaches 0\n"
      "  But no other session is released\n");
  const std::string golden = fixture::slurp(std::string(SPECJUDGE_TEST_DATA) + "/golden/canonical.feature");
  EXPECT_EQ(render_feature(f), golden);
  EXPECT_EQ(parse_feature(golden), f);
}

TEST(GherkinRender, RejectsUnrenderableSpecs) {
  FeatureSpec f{"T", "", {{"S", {{Keyword::kGiven, "a"}}}}};
  EXPECT_NO_THROW(render_feature(f));
  FeatureSpec multiline = f;
  multiline.scenarios[0].steps[0].text = "a\nb";
  EXPECT_THROW(render_feature(multiline), Error);
  FeatureSpec empty = f;
  empty.scenarios.clear();
  EXPECT_THROW(render_feature(empty), Error);
  FeatureSpec keyword_narrative = f;
  keyword_narrative.narrative = "Given sneaky";
  EXPECT_THROW(render_feature(keyword_narrative), Error);
}

TEST(GherkinRender, ParseRenderIdentityOnGeneratedSpecs) {
  fixture::SpecGenerator gen(42);
  for (int i = 0; i < 1000; ++i) {
    const FeatureSpec f = gen.next();
    const std::string text = render_feature(f);
    ASSERT_EQ(parse_feature(text), f) << text;
    ASSERT_EQ(render_feature(parse_feature(text)), text);
  }
}

TEST(GherkinParse, FuzzNeverAborts) {
  fixture::SpecGenerator gen(7);
  std::mt19937 rng(1234);
  std::size_t parsed = 0;
  for (int i = 0; i < 100000; ++i) {
    const std::string text = fixture::fuzz_text(gen, rng, i);
    try {
      const FeatureSpec f = parse_feature(text);
      ++parsed;
      const std::string canonical = render_feature(f);
      ASSERT_EQ(parse_feature(canonical), f);
    } catch (const GherkinError&) {
    }
  }
  EXPECT_GT(parsed, 1000u);
}

FeatureSpec lint_subject() {
  return parse_feature(
      "Feature: F\n"
      "  Scenario: first\n"
      "    And the input is handled properly\n"
      "    When parse runs\n"
      "  Scenario: second\n"
      "    Given len is at most 16\n"
      "    When copy runs safely within buf_size\n"
      "    Then the program crashes\n");
}

TEST(GherkinLint, FlagsEachRule) {
  const auto findings = lint_feature(lint_subject());
  std::vector<std::string> ids;
  for (const auto& f : findings) ids.push_back(f.rule_id + "@" + std::to_string(*f.scenario_index));
  EXPECT_EQ(ids, (std::vector<std::string>{"and-first-step@0", "no-then-step@0", "vague-term@0",
                                           "failure-phrasing@1"}));
  EXPECT_EQ(findings[0].severity, Severity::kError);
  EXPECT_EQ(findings[2].severity, Severity::kWarning);
}

TEST(GherkinLint, ScenarioCountAndConfig) {
  FeatureSpec f{"T", "", {}};
  for (int i = 0; i < 7; ++i) f.scenarios.push_back({"s", {{Keyword::kThen, "x is 0"}}});
  auto findings = lint_feature(f);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].rule_id, "scenario-count");
  EXPECT_FALSE(findings[0].scenario_index.has_value());
  LintConfig relaxed;
  relaxed.max_scenarios = 10;
  EXPECT_TRUE(lint_feature(f, relaxed).empty());
}

TEST(GherkinLint, JsonlOutput) {
  const std::string jsonl = findings_to_jsonl(lint_feature(lint_subject()));
  EXPECT_NE(jsonl.find(R"("rule_id":"and-first-step")"), std::string::npos);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 4);
  for (const auto& rule : lint_rules()) EXPECT_EQ(find_rule(rule.id), &rule);
  EXPECT_EQ(find_rule("nope"), nullptr);
}

}  // namespace
