// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "specjudge/backend.hpp"
#include "specjudge/error.hpp"
#include "specjudge/gherkin.hpp"

namespace specjudge {

enum class AgentRole { kSlicer, kReverseEngineer, kJudge };

std::string_view to_string(AgentRole role);
AgentRole agent_role_from_string(std::string_view s);

/// A prompt template in three sections, each introduced by a line holding
/// only the section marker:
///
///   [SYSTEM]       role definition, sent as the system message
///   [USER]         XML-delimited inputs with {placeholder} slots
///   [INSTRUCTION]  task steps and output format, appended to the user message
struct PromptTemplate {
  std::string system;
  std::string user;
  std::string instruction;

  static PromptTemplate parse(std::string_view text);
  std::string text() const;
  std::string digest() const;
  /// Placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;
};

/// Built-in templates: "slicer", "reverse_engineer", "judge" (with contract)
/// and "judge_blind" (no contract section).
PromptTemplate builtin_template(std::string_view name);

struct AgentConfig {
  AgentRole role = AgentRole::kJudge;
  std::string model_profile;
  PromptTemplate prompt;
  GenerationParams params;
  int max_format_retries = 2;
  /// Judge only: false selects the contract-free variant (RAW and BLIND).
  bool with_contract = true;

  std::vector<std::string> required_placeholders() const;
  /// Throws Error(kTemplate) when a required placeholder or section is absent.
  void validate() const;
};

using AgentInputs = std::map<std::string, std::string>;

/// Escapes &, < and > so payloads cannot close the surrounding XML block.
std::string xml_escape(std::string_view text);

/// Exactly two messages: system, then user (inputs followed by instruction).
/// Substitution is single-pass; braces inside payloads are never expanded.
std::vector<ChatMessage> build_prompt(const AgentConfig& config, const AgentInputs& inputs);

// ---------------------------------------------------------------------------
// Output parsing

struct SlicerOutput {
  std::string thinking;
  std::string sliced_bad;
  std::string sliced_good;
  std::vector<std::string> warnings;
};

struct EngineerOutput {
  std::string thinking;
  gherkin::FeatureSpec feature;
  std::vector<std::string> warnings;
};

enum class Verdict { kGood, kBad };

std::string_view to_string(Verdict v);

struct JudgeOutput {
  std::string thinking;
  Verdict verdict = Verdict::kGood;
  std::vector<std::string> warnings;
};

/// Raised when the <GHERKIN> payload does not parse; keeps the payload.
class ContractError : public gherkin::GherkinError {
 public:
  ContractError(const gherkin::GherkinError& cause, std::string payload)
      : gherkin::GherkinError(cause), payload_(std::move(payload)) {}
  const std::string& payload() const noexcept { return payload_; }

 private:
  std::string payload_;
};

struct TagBlock {
  std::string content;
  bool duplicated = false;
};

/// Finds the first <tag>...</tag> block (tag names match case-insensitively).
/// Returns nullopt when the opening tag is absent; an opening tag without a
/// closing one raises FormatError.
std::optional<TagBlock> extract_tag(std::string_view text, std::string_view tag);

/// Drops a reasoning preamble terminated by </think>, if any.
std::string_view strip_reasoning(std::string_view raw);

SlicerOutput parse_slicer_output(std::string_view raw);
EngineerOutput parse_engineer_output(std::string_view raw);
JudgeOutput parse_judge_output(std::string_view raw);

// ---------------------------------------------------------------------------
// Execution

struct AgentFailure {
  AgentRole role = AgentRole::kSlicer;
  std::string item_id;
  int attempts = 1;
  ErrorCode error_code = ErrorCode::kFormat;
  std::string error_message;
  std::string raw_last_output;
};

template <typename Output>
struct AgentRun {
  std::optional<Output> output;
  std::optional<AgentFailure> failure;
  int attempts = 0;

  bool ok() const { return output.has_value(); }
};

/// Builds the prompt, calls the backend and parses the reply. Format,
/// contract, verdict, empty-slice, transport and timeout errors are retried
/// with the identical prompt up to max_format_retries times; attempt k is sent
/// with ChatRequest::attempt = k. Exhaustion yields an AgentFailure. Replay
/// misses and configuration errors propagate as exceptions.
AgentRun<SlicerOutput> run_slicer(const AgentConfig& config, const AgentInputs& inputs,
                                  ChatBackend& backend, const std::string& item_id);
AgentRun<EngineerOutput> run_engineer(const AgentConfig& config, const AgentInputs& inputs,
                                      ChatBackend& backend, const std::string& item_id);
AgentRun<JudgeOutput> run_judge(const AgentConfig& config, const AgentInputs& inputs,
                                ChatBackend& backend, const std::string& item_id);

/// True for errors that a fresh sample may cure.
bool is_retryable(ErrorCode code);

// ---------------------------------------------------------------------------
// Measurements

struct Reduction {
  double percent = 0.0;
  bool clamped = false;  // slice longer than the original
};

/// (|original| - |sliced|) / |original| * 100, clamped at 0.
Reduction slicing_reduction(std::string_view original, std::string_view sliced);

/// Sentences are counted at runs of . ! ? followed by whitespace or the end
/// of text, outside `code` spans, skipping common abbreviations such as
/// "e.g." and "i.e."; trailing text without terminal punctuation counts as
/// one more sentence.
std::size_t count_sentences(std::string_view text);

struct ThinkingCapFinding {
  std::size_t count = 0;
  std::size_t cap = 4;
  std::string message;
};

std::optional<ThinkingCapFinding> check_thinking_cap(std::string_view thinking,
                                                     std::size_t cap = 4);

}  // namespace specjudge
