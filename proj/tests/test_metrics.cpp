// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "specjudge/metrics.hpp"

namespace {

using namespace specjudge;

SampleRecord sample(const std::string& id, Label label, std::optional<Verdict> verdict,
                    std::vector<std::string> cwes = {}) {
  SampleRecord s;
  s.sample_id = id;
  s.pair_id = "p" + id;
  s.project = "proj";
  s.label = label;
  s.verdict = verdict;
  s.cwe_ids = std::move(cwes);
  s.pair_status = PairStatus::kComplete;
  return s;
}

constexpr auto V = Label::kVulnerable;
constexpr auto B = Label::kBenign;
constexpr auto bad = Verdict::kBad;
constexpr auto good = Verdict::kGood;

TEST(Confusion, CountsEachCell) {
  const std::vector<SampleRecord> s = {sample("1", V, bad), sample("2", V, good), sample("3", B, bad),
                                       sample("4", B, good), sample("5", B, good)};
  EXPECT_EQ(confusion(s), (ConfusionMatrix{1, 1, 1, 2}));
  auto with_gap = s;
  with_gap.push_back(sample("6", V, std::nullopt));
  try {
    confusion(with_gap);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingVerdict);
  }
  EXPECT_EQ(judged_samples(with_gap).size(), 5u);
}

TEST(Score, MatchesClosedFormOnRandomMatrices) {
  std::mt19937 rng(8);
  std::uniform_int_distribution<std::size_t> cell(0, 500);
  for (int i = 0; i < 2000; ++i) {
    const ConfusionMatrix cm{cell(rng) + 1, cell(rng), cell(rng), cell(rng)};
    const ScoreReport r = score(cm);
    const double tp = static_cast<double>(cm.tp);
    ASSERT_NEAR(r.f1, 2 * tp / (2 * tp + static_cast<double>(cm.fp + cm.fn)), 1e-12);
    ASSERT_NEAR(r.precision, tp / static_cast<double>(cm.tp + cm.fp), 1e-15);
    ASSERT_NEAR(r.accuracy, static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()), 1e-15);
  }
}

TEST(Score, ZeroDenominatorsAreFlagged) {
  const ScoreReport none = score({0, 0, 0, 7});
  EXPECT_TRUE(none.precision_undefined);
  EXPECT_TRUE(none.recall_undefined);
  EXPECT_TRUE(none.f1_undefined);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_TRUE(none.pc_rate_undefined);
  const ScoreReport misses = score({0, 3, 4, 0}, 0, 2);
  EXPECT_FALSE(misses.precision_undefined);
  EXPECT_TRUE(misses.f1_undefined);
  EXPECT_FALSE(misses.pc_rate_undefined);
}

TEST(Score, PublishedOperatingPoints) {
  for (auto [p, r, f1] : {std::tuple{0.792, 0.860, 0.825}, std::tuple{0.572, 0.802, 0.668}}) {
    const ConfusionMatrix cm = fixture::matrix_for(p, r);
    const ScoreReport s = score(cm);
    EXPECT_NEAR(s.precision, p, 5e-4);
    EXPECT_NEAR(s.recall, r, 5e-4);
    EXPECT_NEAR(s.f1, f1, 1e-3);
  }
}

PairArtifact artifact(std::optional<Verdict> v, std::optional<Verdict> p) {
  PairArtifact a;
  a.pair_id = "x";
  if (v) a.verdict_vulnerable = JudgeOutput{"", *v, {}};
  if (p) a.verdict_patched = JudgeOutput{"", *p, {}};
  a.status = v && p ? PairStatus::kComplete : PairStatus::kInvalidated;
  return a;
}

TEST(PairCorrectTest, CountsOnlyBadGoodOnValidPairs) {
  const std::vector<PairArtifact> arts = {artifact(bad, good), artifact(bad, bad), artifact(good, good),
                                          artifact(good, bad), artifact(bad, std::nullopt),
                                          artifact(std::nullopt, std::nullopt)};
  const PairCorrect pc = pair_correct(arts);
  EXPECT_EQ(pc.count, 1u);
  EXPECT_EQ(pc.pairs_valid, 4u);
  EXPECT_EQ(pc.pairs_total, 6u);

  RunResult run;
  run.artifacts = arts;
  run.samples = {sample("1", V, bad), sample("2", B, good)};
  EXPECT_DOUBLE_EQ(score_run(run).pc_rate, 0.25);
  EXPECT_DOUBLE_EQ(score_run(run, true).pc_rate, 1.0 / 6.0);
}

TEST(PairCorrectTest, PublishedRate) {
  std::vector<PairArtifact> arts;
  for (int i = 0; i < 427; ++i) arts.push_back(i < 275 ? artifact(bad, good) : artifact(bad, bad));
  for (int i = 0; i < 8; ++i) arts.push_back(artifact(std::nullopt, std::nullopt));
  const PairCorrect pc = pair_correct(arts);
  const ScoreReport s = score({}, pc.count, pc.pairs_valid);
  EXPECT_NEAR(s.pc_rate, 275.0 / 427.0, 1e-15);
  EXPECT_NEAR(s.pc_rate, 0.644, 1e-3);
}

TEST(Cwe, BreakdownCountsIncidencesAndSamples) {
  const std::vector<SampleRecord> s = {
      sample("1", B, bad, {"CWE-787", "CWE-125"}),
      sample("2", B, bad, {"CWE-787", "CWE-787"}),
      sample("3", V, good, {"CWE-476"}),
      sample("4", V, good, {}),
      sample("5", V, bad, {"CWE-190"}),
      sample("6", B, good, {"CWE-190"}),
  };
  const auto errors = sample_errors(s);
  ASSERT_EQ(errors.size(), 4u);
  const CweErrorBreakdown b = cwe_breakdown(errors);
  EXPECT_EQ(b.samples_fp, 2u);
  EXPECT_EQ(b.samples_fn, 2u);
  EXPECT_EQ(b.rows, (std::vector<CweRow>{{"CWE-787", 2, 0}, {"(none)", 0, 1}, {"CWE-125", 1, 0},
                                         {"CWE-476", 0, 1}}));
  const CweErrorBreakdown top = cwe_breakdown(errors, 2);
  EXPECT_EQ(top.rows, (std::vector<CweRow>{{"CWE-787", 2, 0}, {"(none)", 0, 1}, {"Others", 1, 1}}));
}

TEST(Corrections, HandBuiltFixture) {
  std::vector<SampleRecord> blind, feature;
  // Three corrected, one regressed, two unchanged.
  const std::vector<std::tuple<Label, Verdict, Verdict>> rows = {
      {V, good, bad}, {B, bad, good}, {V, good, bad}, {B, good, bad}, {V, bad, bad}, {B, good, good}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [label, before, after] = rows[i];
    blind.push_back(sample(std::to_string(i), label, before));
    feature.push_back(sample(std::to_string(i), label, after));
  }
  const CorrectionReport r = correction_analysis(blind, feature);
  EXPECT_EQ(r.corrected, 3u);
  EXPECT_EQ(r.regressed, 1u);
  EXPECT_EQ(r.unchanged, 2u);
  EXPECT_EQ(r.shared, 6u);
  EXPECT_DOUBLE_EQ(r.ratio, 3.0);

  feature.push_back(sample("extra", V, bad));
  EXPECT_EQ(correction_analysis(blind, feature).only_feature, 1u);
  EXPECT_THROW(correction_analysis(blind, {sample("zzz", V, bad)}), Error);
  EXPECT_TRUE(correction_analysis({sample("a", V, bad)}, {sample("a", V, bad)}).ratio_undefined);
}

Report sample_report() {
  Report r;
  r.scores = {{"feature", score({370, 97, 60, 338}, 275, 427)}, {"empty", score({0, 0, 0, 3})}};
  r.tiers = {{"judge-a", 0.448, 0.510, 0.800}, {"judge-b", std::nullopt, 0.5, 0.75}};
  r.matrix = {{"e1", "j1", 0.825, std::nullopt}, {"e1", "j2", std::nullopt, "ReplayMiss: x"},
              {"e2", "j1", 0.7, std::nullopt}};
  r.cwe = CweErrorBreakdown{{{"CWE-787", 5, 2}, {"Others", 1, 1}}, 6, 3};
  r.corrections = CorrectionReport{272, 65, 100, 437, 272.0 / 65.0, false, 0, 2};
  ValidationReport v;
  v.pairs = 2;
  v.samples = 4;
  v.vulnerable = 2;
  v.benign = 2;
  v.cwe_frequency = {{"CWE-787", 4}};
  r.validation = v;
  r.double_standards = std::vector<DoubleStandardHit>{{"mruby", "10", "11", 1.0, "CVE-1", "CVE-2"}};
  return r;
}

TEST(Report, TableMatchesGoldenFile) {
  const std::string table = render_report(sample_report(), ReportFormat::kTable);
  EXPECT_EQ(table, fixture::slurp(std::string(SPECJUDGE_TEST_DATA) + "/golden/report.txt"));
}

TEST(Report, MachineFormRoundTripsAndIsIdempotent) {
  const Report r = sample_report();
  const std::string machine = render_report(r, ReportFormat::kMachine);
  const Report back = read_machine_report(machine);
  EXPECT_EQ(render_report(back, ReportFormat::kMachine), machine);
  EXPECT_EQ(render_report(back, ReportFormat::kTable), render_report(r, ReportFormat::kTable));
  EXPECT_EQ(back.scores, r.scores);
  EXPECT_EQ(back.tiers, r.tiers);
  EXPECT_EQ(back.matrix, r.matrix);
  EXPECT_EQ(back.cwe, r.cwe);
  EXPECT_EQ(back.corrections, r.corrections);
  EXPECT_EQ(report_format_from_string("machine"), ReportFormat::kMachine);
  EXPECT_THROW(report_format_from_string("xml"), Error);
  EXPECT_THROW(read_machine_report("{\"kind\":\"bogus\"}\n"), Error);
}

}  // namespace
