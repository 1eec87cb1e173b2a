// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specjudge/agents.hpp"
#include "specjudge/backend.hpp"
#include "specjudge/dataset.hpp"
#include "specjudge/gherkin.hpp"

namespace specjudge {

/// RAW judges raw functions without a contract, BLIND judges slices without
/// a contract, FEATURE runs slicer, reverse engineer and judge.
enum class Tier { kRaw, kBlind, kFeature };

enum class PairStatus { kComplete, kInvalidated };

std::string_view to_string(Tier tier);
std::string_view to_string(PairStatus status);
Tier tier_from_string(std::string_view s);

struct RunConfig {
  Tier tier = Tier::kFeature;
  std::optional<AgentConfig> slicer;
  std::optional<AgentConfig> engineer;
  AgentConfig judge;
  /// Root for the response cache and run directories; empty disables
  /// persistence.
  std::filesystem::path cache_dir;
  unsigned worker_count = 4;
  std::string run_id = "run";
  /// Drop the surviving verdict of a pair whose other judge call failed.
  bool drop_partial_pairs = false;
  /// Omit wall-clock fields from every persisted file.
  bool deterministic = true;

  /// Checks the tier contract: slicer iff tier != RAW, engineer iff FEATURE,
  /// judge uses a contract iff FEATURE.
  void validate() const;
  nlohmann::json snapshot() const;
};

struct PairArtifact {
  std::string pair_id;
  std::optional<SlicerOutput> slicer;
  std::optional<Reduction> reduction_vulnerable;
  std::optional<Reduction> reduction_patched;
  std::optional<gherkin::FeatureSpec> feature;
  std::optional<JudgeOutput> verdict_vulnerable;
  std::optional<JudgeOutput> verdict_patched;
  PairStatus status = PairStatus::kInvalidated;
  /// Agent failures in the order they happened; an upstream (slicer or
  /// reverse-engineer) failure is always the only entry.
  std::vector<AgentFailure> failures;
  /// Attempts per stage: slicer, reverse_engineer, judge_vulnerable, judge_patched.
  std::map<std::string, int> attempts;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static PairArtifact from_json(const nlohmann::json& j);
};

/// One judged (or unjudged) sample, the row format of samples.jsonl.
struct SampleRecord {
  std::string sample_id;
  std::string pair_id;
  std::string project;
  Tier tier = Tier::kFeature;
  Label label = Label::kBenign;
  std::optional<Verdict> verdict;
  PairStatus pair_status = PairStatus::kInvalidated;
  std::vector<std::string> cwe_ids;
  std::string judged_code;
  std::optional<std::string> gherkin;
  std::string thinking;
  int attempts = 0;
  std::optional<std::string> failure;

  nlohmann::json to_json() const;
  static SampleRecord from_json(const nlohmann::json& j);
};

std::string samples_to_jsonl(const std::vector<SampleRecord>& samples);
std::vector<SampleRecord> samples_from_jsonl(std::string_view text);
std::vector<SampleRecord> load_samples(const std::filesystem::path& run_dir_or_file);

struct RunTallies {
  std::size_t pairs_total = 0;
  std::size_t pairs_valid = 0;
  std::size_t samples_judged = 0;

  bool operator==(const RunTallies&) const = default;
};

struct RunResult {
  std::string run_id;
  Tier tier = Tier::kFeature;
  nlohmann::json config;
  std::vector<PairArtifact> artifacts;
  std::vector<SampleRecord> samples;
  RunTallies tallies;
  bool drop_partial_pairs = false;
  /// Run directory when persisted.
  std::optional<std::filesystem::path> directory;
};

/// Runs one pair through the tier. Counterpart isolation holds: each judge
/// call sees exactly one sample's code.
PairArtifact run_pair(const CommitPair& pair, const RunConfig& cfg, ChatBackend& backend);

/// Processes every pair with up to worker_count in flight. Responses are
/// memoized in `shared` (created when null) and, when cache_dir is set, on
/// disk under <cache_dir>/responses; finished pairs are persisted under
/// <cache_dir>/runs/<run_id>/pairs so an interrupted run resumes.
RunResult run_corpus(const Corpus& corpus, const RunConfig& cfg, ChatBackend& backend,
                     std::shared_ptr<Transcript> shared = nullptr);

std::filesystem::path run_directory(const RunConfig& cfg);

/// Reads a persisted run directory (manifest, artifacts, samples).
RunResult load_run(const std::filesystem::path& run_dir);

/// Asks running workers to stop after their current pair; run_corpus then
/// throws Error(kInterrupted). Safe to call from a signal handler.
void request_interrupt() noexcept;
void clear_interrupt() noexcept;

// ---------------------------------------------------------------------------
// Experiment configuration

struct ModelProfile {
  std::string name;
  GenerationParams params;
  std::string base_url;
  std::string token_env;
  int timeout_s = 120;
};

/// Declarative experiment setup, usually read from a JSON config file:
///
///   {
///     "profiles": {"<name>": {"model_name": ..., "base_url": ..., "token_env": ...,
///                            "prefix_injection": ..., "temperature": 0.2,
///                            "top_p": 0.9, "max_new_tokens": 2048, "timeout_s": 120}},
///     "agents": {"slicer": "<profile>", "reverse_engineer": "<profile>",
///                "judge": "<profile>"},
///     "templates_dir": "path",        (optional)
///     "max_format_retries": 2,
///     "workers": 4,
///     "drop_partial_pairs": false
///   }
///
/// Templates resolve as <templates_dir>/<template>.<profile>.txt, then
/// <templates_dir>/<template>.txt, then the built-in copy.
struct HarnessConfig {
  std::map<std::string, ModelProfile> profiles;
  std::string slicer_profile;
  std::string engineer_profile;
  std::string judge_profile;
  std::optional<std::filesystem::path> templates_dir;
  int max_format_retries = 2;
  unsigned workers = 4;
  bool drop_partial_pairs = false;

  static HarnessConfig from_json(const nlohmann::json& j,
                                 const std::filesystem::path& base_dir = {});
  static HarnessConfig load(const std::filesystem::path& path);

  const ModelProfile& profile(const std::string& name) const;
  AgentConfig agent(AgentRole role, const std::string& profile_name,
                    bool with_contract = true) const;
  /// Full run configuration for one tier using the configured profiles.
  RunConfig run_config(Tier tier, const std::string& run_id,
                       const std::filesystem::path& cache_dir,
                       const std::optional<std::string>& engineer_profile = std::nullopt,
                       const std::optional<std::string>& judge_profile = std::nullopt) const;
};

struct TierResults {
  RunResult raw;
  RunResult blind;
  RunResult feature;
};

/// RAW, BLIND and FEATURE over the same corpus; slicer responses are shared
/// between BLIND and FEATURE.
TierResults run_tiers(const Corpus& corpus, const HarnessConfig& config, ChatBackend& backend,
                      const std::string& run_id, const std::filesystem::path& cache_dir,
                      bool deterministic = true,
                      std::shared_ptr<Transcript> shared = nullptr);

struct MatrixCell {
  std::string engineer_profile;
  std::string judge_profile;
  std::optional<RunResult> result;
  std::optional<std::string> error;
};

/// FEATURE runs for every (engineer, judge) profile combination. Slicer and
/// reverse-engineer responses are produced once and reused across judges.
std::vector<MatrixCell> run_matrix(const Corpus& corpus,
                                   const std::vector<std::string>& engineer_profiles,
                                   const std::vector<std::string>& judge_profiles,
                                   const HarnessConfig& config, ChatBackend& backend,
                                   const std::string& run_id,
                                   const std::filesystem::path& cache_dir,
                                   bool deterministic = true,
                                   std::shared_ptr<Transcript> shared = nullptr);

}  // namespace specjudge
