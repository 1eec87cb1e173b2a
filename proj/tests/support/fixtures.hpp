// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

// Synthetic corpora and scripted backends shared by the unit and acceptance
// tests.

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "specjudge/backend.hpp"
#include "specjudge/dataset.hpp"
#include "specjudge/gherkin.hpp"
#include "specjudge/metrics.hpp"
#include "specjudge/pipeline.hpp"

namespace specjudge::fixture {

/// Marker tokens embedded in pair i's functions. They contain no characters
/// that prompt building escapes, so mock rules can match them verbatim.
std::string vulnerable_marker(std::size_t i);
std::string patched_marker(std::size_t i);

/// `pairs` commit pairs over a few projects with distinct code, CVEs and CWEs.
Corpus synthetic_corpus(std::size_t pairs);

struct OracleScript {
  /// Pairs whose slicer replies are always malformed.
  std::set<std::size_t> broken_slicer;
  /// Pairs whose vulnerable-sample judge replies are always malformed.
  std::set<std::size_t> broken_vulnerable_judge;
  /// Pairs whose reverse-engineer replies are always malformed.
  std::set<std::size_t> broken_engineer;
  /// Judge verdicts are inverted for these pairs' patched samples.
  std::set<std::size_t> wrong_patched_verdict;
};

/// Rules answering every agent perfectly for `corpus`, except where the script
/// says otherwise.
std::vector<MockBackend::Rule> oracle_rules(const Corpus& corpus, const OracleScript& script = {});

nlohmann::json rules_to_json(const std::vector<MockBackend::Rule>& rules);

/// Harness config with the given profile names (each its own model name).
HarnessConfig harness_config(const std::vector<std::string>& profiles, unsigned workers = 1);

/// Forwards to an inner backend and raises Error(kInterrupted) once `budget`
/// calls have been made.
class InterruptingBackend : public ChatBackend {
 public:
  InterruptingBackend(ChatBackend& inner, std::size_t budget) : inner_(inner), budget_(budget) {}
  std::string complete(const ChatRequest& request) override;

 private:
  ChatBackend& inner_;
  std::size_t budget_;
  std::atomic<std::size_t> calls_{0};
};

/// Forwards to an inner backend, prefixing reverse-engineer feature titles
/// with the requested model name so that each engineer model yields its own
/// contract.
class PerModelContracts : public ChatBackend {
 public:
  explicit PerModelContracts(ChatBackend& inner) : inner_(inner) {}
  std::string complete(const ChatRequest& request) override;

 private:
  ChatBackend& inner_;
};

/// Integer confusion matrix whose precision and recall round to the given
/// 3-decimal values, found by search over the number of positives.
ConfusionMatrix matrix_for(double precision, double recall);

/// Random well-formed specs.
class SpecGenerator {
 public:
  explicit SpecGenerator(unsigned seed) : rng_(seed) {}
  gherkin::FeatureSpec next();

 private:
  int pick(int lo, int hi);
  std::string phrase(int min_words, int max_words);

  std::mt19937 rng_;
};

/// Parser fuzz input number i: even inputs are mutated renderings of
/// generated specs, odd inputs are random runs of structural fragments.
std::string fuzz_text(SpecGenerator& gen, std::mt19937& rng, int i);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

std::string slurp(const std::filesystem::path& path);

}  // namespace specjudge::fixture
