// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/agents.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <spdlog/spdlog.h>

#include "builtin_templates.inc"
#include "specjudge/digest.hpp"
#include "util.hpp"

namespace specjudge {

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::kSlicer: return "slicer";
    case AgentRole::kReverseEngineer: return "reverse_engineer";
    case AgentRole::kJudge: return "judge";
  }
  return "?";
}

AgentRole agent_role_from_string(std::string_view s) {
  if (s == "slicer") return AgentRole::kSlicer;
  if (s == "reverse_engineer" || s == "engineer") return AgentRole::kReverseEngineer;
  if (s == "judge") return AgentRole::kJudge;
  throw Error(ErrorCode::kInvalidArgument, "unknown agent role '" + std::string(s) + "'");
}

std::string_view to_string(Verdict v) { return v == Verdict::kGood ? "good" : "bad"; }

// ---------------------------------------------------------------------------
// Templates

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate t;
  std::string* current = nullptr;
  bool seen[3] = {false, false, false};
  for (const std::string& line : split_lines(text)) {
    const std::string_view marker = rtrim(line);
    if (marker == "[SYSTEM]") {
      current = &t.system;
      seen[0] = true;
      continue;
    }
    if (marker == "[USER]") {
      current = &t.user;
      seen[1] = true;
      continue;
    }
    if (marker == "[INSTRUCTION]") {
      current = &t.instruction;
      seen[2] = true;
      continue;
    }
    if (current == nullptr) {
      if (trim(line).empty()) continue;
      throw Error(ErrorCode::kTemplate, "template text before the first section marker");
    }
    *current += line;
    *current += '\n';
  }
  if (!seen[0] || !seen[1] || !seen[2]) {
    throw Error(ErrorCode::kTemplate, "template needs [SYSTEM], [USER] and [INSTRUCTION] sections");
  }
  for (std::string* s : {&t.system, &t.user, &t.instruction}) *s = std::string(trim(*s));
  return t;
}

std::string PromptTemplate::text() const {
  return "[SYSTEM]\n" + system + "\n\n[USER]\n" + user + "\n\n[INSTRUCTION]\n" + instruction + "\n";
}

std::string PromptTemplate::digest() const { return sha256_hex(text()); }

namespace {

bool is_placeholder_start(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }
bool is_placeholder_char(char c) { return is_placeholder_start(c) || (c >= '0' && c <= '9'); }

/// Length of a `{name}` token at `pos`, or 0 when there is none.
std::size_t placeholder_at(std::string_view s, std::size_t pos) {
  if (s[pos] != '{' || pos + 1 >= s.size() || !is_placeholder_start(s[pos + 1])) return 0;
  std::size_t end = pos + 1;
  while (end < s.size() && is_placeholder_char(s[end])) ++end;
  if (end >= s.size() || s[end] != '}') return 0;
  return end - pos + 1;
}

template <typename Fn>
std::string substitute(std::string_view tmpl, Fn&& replacement) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    if (const std::size_t len = placeholder_at(tmpl, i); len > 0) {
      out += replacement(std::string(tmpl.substr(i + 1, len - 2)));
      i += len;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  for (const std::string* section : {&system, &user, &instruction}) {
    substitute(*section, [&](const std::string& name) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      return std::string();
    });
  }
  return names;
}

PromptTemplate builtin_template(std::string_view name) {
  if (name == "slicer") return PromptTemplate::parse(builtin::kSlicerTemplate);
  if (name == "reverse_engineer") return PromptTemplate::parse(builtin::kReverseEngineerTemplate);
  if (name == "judge") return PromptTemplate::parse(builtin::kJudgeTemplate);
  if (name == "judge_blind") return PromptTemplate::parse(builtin::kJudgeBlindTemplate);
  throw Error(ErrorCode::kTemplate, "no built-in template named '" + std::string(name) + "'");
}

std::vector<std::string> AgentConfig::required_placeholders() const {
  switch (role) {
    case AgentRole::kSlicer:
      return {"bad_code", "good_code", "cve_description", "commit_message"};
    case AgentRole::kReverseEngineer:
      return {"sliced_bad", "sliced_good", "cve_description", "commit_message"};
    case AgentRole::kJudge:
      if (with_contract) return {"gherkin", "target_code"};
      return {"target_code"};
  }
  return {};
}

void AgentConfig::validate() const {
  const auto present = prompt.placeholders();
  for (const auto& name : required_placeholders()) {
    if (std::find(present.begin(), present.end(), name) == present.end()) {
      throw Error(ErrorCode::kTemplate, std::string(to_string(role)) +
                                            " template lacks placeholder {" + name + "}");
    }
  }
  if (role == AgentRole::kJudge && !with_contract &&
      std::find(present.begin(), present.end(), "gherkin") != present.end()) {
    throw Error(ErrorCode::kTemplate, "contract-free judge template must not take {gherkin}");
  }
  if (prompt.system.empty()) throw Error(ErrorCode::kTemplate, "empty [SYSTEM] section");
  if (max_format_retries < 0) throw Error(ErrorCode::kConfig, "max_format_retries must be >= 0");
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<ChatMessage> build_prompt(const AgentConfig& config, const AgentInputs& inputs) {
  auto fill = [&](const std::string& name) {
    auto it = inputs.find(name);
    if (it == inputs.end()) {
      throw Error(ErrorCode::kMissingPlaceholder, "missing input for placeholder " + name);
    }
    return xml_escape(it->second);
  };
  std::string system = substitute(config.prompt.system, fill);
  std::string user = substitute(config.prompt.user, fill);
  const std::string instruction = substitute(config.prompt.instruction, fill);
  if (!instruction.empty()) user += "\n\n" + instruction;
  if (trim(system).empty() || trim(user).empty()) {
    throw Error(ErrorCode::kTemplate, "prompt renders to an empty message");
  }
  return {{Role::kSystem, std::move(system)}, {Role::kUser, std::move(user)}};
}

// ---------------------------------------------------------------------------
// Output parsing

namespace {

std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + k])) !=
          std::tolower(static_cast<unsigned char>(needle[k]))) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

std::size_t rfind_ci(std::string_view haystack, std::string_view needle) {
  std::size_t last = std::string_view::npos;
  for (std::size_t pos = find_ci(haystack, needle); pos != std::string_view::npos;
       pos = find_ci(haystack, needle, pos + 1)) {
    last = pos;
  }
  return last;
}

std::string optional_thinking(std::string_view text, std::vector<std::string>& warnings) {
  auto block = extract_tag(text, "THINKING");
  if (!block) {
    warnings.push_back("no <THINKING> block");
    return {};
  }
  if (block->duplicated) warnings.push_back("duplicate <THINKING> blocks; first one used");
  return std::move(block->content);
}

TagBlock required_tag(std::string_view text, std::string_view tag,
                      std::vector<std::string>& warnings) {
  auto block = extract_tag(text, tag);
  if (!block) throw FormatError(std::string(tag));
  if (block->duplicated) {
    warnings.push_back("duplicate <" + std::string(tag) + "> blocks; first one used");
  }
  return std::move(*block);
}

std::string strip_fences(std::string_view payload) {
  std::string_view body = trim(payload);
  if (!body.starts_with("```")) return std::string(payload);
  const std::size_t first_nl = body.find('\n');
  if (first_nl == std::string_view::npos) return {};
  body.remove_prefix(first_nl + 1);
  body = rtrim(body);
  if (body.ends_with("```")) body.remove_suffix(3);
  return std::string(body);
}

}  // namespace

std::string_view strip_reasoning(std::string_view raw) {
  const std::size_t end = rfind_ci(raw, "</think>");
  if (end == std::string_view::npos) return raw;
  return raw.substr(end + 8);
}

std::optional<TagBlock> extract_tag(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const std::size_t start = find_ci(text, open);
  if (start == std::string_view::npos) return std::nullopt;
  const std::size_t body = start + open.size();
  const std::size_t end = find_ci(text, close, body);
  if (end == std::string_view::npos) throw FormatError(std::string(tag), "no closing tag");
  TagBlock block;
  block.content = std::string(text.substr(body, end - body));
  block.duplicated = find_ci(text, open, end + close.size()) != std::string_view::npos;
  return block;
}

SlicerOutput parse_slicer_output(std::string_view raw) {
  const std::string_view text = strip_reasoning(raw);
  SlicerOutput out;
  out.thinking = optional_thinking(text, out.warnings);
  out.sliced_bad = required_tag(text, "SLICED_BAD_CODE", out.warnings).content;
  out.sliced_good = required_tag(text, "SLICED_GOOD_CODE", out.warnings).content;
  if (trim(out.sliced_bad).empty()) {
    throw Error(ErrorCode::kEmptySlice, "<SLICED_BAD_CODE> is empty");
  }
  if (trim(out.sliced_good).empty()) {
    throw Error(ErrorCode::kEmptySlice, "<SLICED_GOOD_CODE> is empty");
  }
  return out;
}

EngineerOutput parse_engineer_output(std::string_view raw) {
  const std::string_view text = strip_reasoning(raw);
  EngineerOutput out;
  out.thinking = optional_thinking(text, out.warnings);
  const std::string payload = required_tag(text, "GHERKIN", out.warnings).content;
  const std::string unfenced = strip_fences(payload);
  if (unfenced != payload) out.warnings.push_back("stripped code fences around <GHERKIN>");
  try {
    out.feature = gherkin::parse_feature(unfenced);
  } catch (const gherkin::GherkinError& e) {
    throw ContractError(e, payload);
  }
  return out;
}

JudgeOutput parse_judge_output(std::string_view raw) {
  const std::string_view text = strip_reasoning(raw);
  JudgeOutput out;
  out.thinking = optional_thinking(text, out.warnings);
  const std::string verdict = to_lower(trim(required_tag(text, "VERDICT", out.warnings).content));
  if (verdict == "good") {
    out.verdict = Verdict::kGood;
  } else if (verdict == "bad") {
    out.verdict = Verdict::kBad;
  } else {
    throw Error(ErrorCode::kVerdict, "verdict '" + verdict + "' is neither good nor bad");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

bool is_retryable(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat:
    case ErrorCode::kGherkin:
    case ErrorCode::kVerdict:
    case ErrorCode::kEmptySlice:
    case ErrorCode::kTransport:
    case ErrorCode::kTimeout:
    case ErrorCode::kEmptyResponse:
      return true;
    default:
      return false;
  }
}

namespace {

template <typename Output, typename Parser>
AgentRun<Output> run_agent(const AgentConfig& config, const AgentInputs& inputs,
                           ChatBackend& backend, const std::string& item_id, Parser parse) {
  config.validate();
  ChatRequest request;
  request.messages = build_prompt(config, inputs);
  request.params = config.params;
  request.params.validate();
  request.stage = std::string(to_string(config.role));
  if (config.role == AgentRole::kJudge && !config.with_contract) request.stage = "judge_blind";

  AgentRun<Output> run;
  AgentFailure failure{config.role, item_id, 0, ErrorCode::kFormat, {}, {}};
  for (int attempt = 0; attempt <= config.max_format_retries; ++attempt) {
    request.attempt = attempt;
    run.attempts = attempt + 1;
    std::string raw;
    try {
      raw = backend.complete(request);
      run.output = parse(raw);
      return run;
    } catch (const Error& e) {
      if (!is_retryable(e.code())) throw;
      failure.error_code = e.code();
      failure.error_message = e.what();
      failure.raw_last_output = raw;
      spdlog::debug("{} {} attempt {} failed: {}", to_string(config.role), item_id, attempt + 1,
                    e.what());
    }
  }
  failure.attempts = run.attempts;
  run.failure = std::move(failure);
  return run;
}

}  // namespace

AgentRun<SlicerOutput> run_slicer(const AgentConfig& config, const AgentInputs& inputs,
                                  ChatBackend& backend, const std::string& item_id) {
  return run_agent<SlicerOutput>(config, inputs, backend, item_id, parse_slicer_output);
}

AgentRun<EngineerOutput> run_engineer(const AgentConfig& config, const AgentInputs& inputs,
                                      ChatBackend& backend, const std::string& item_id) {
  return run_agent<EngineerOutput>(config, inputs, backend, item_id, parse_engineer_output);
}

AgentRun<JudgeOutput> run_judge(const AgentConfig& config, const AgentInputs& inputs,
                                ChatBackend& backend, const std::string& item_id) {
  return run_agent<JudgeOutput>(config, inputs, backend, item_id, parse_judge_output);
}

// ---------------------------------------------------------------------------
// Measurements

Reduction slicing_reduction(std::string_view original, std::string_view sliced) {
  if (original.empty()) throw Error(ErrorCode::kEmptyOriginal, "original text is empty");
  if (sliced.size() > original.size()) return {0.0, true};
  const double o = static_cast<double>(original.size());
  return {(o - static_cast<double>(sliced.size())) / o * 100.0, false};
}

namespace {

constexpr std::array<std::string_view, 10> kAbbreviations = {
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "approx.", "resp.", "al.", "no.", "fig."};

bool ends_with_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !std::isspace(static_cast<unsigned char>(text[start - 1])) &&
         text[start - 1] != '(') {
    --start;
  }
  const std::string word = to_lower(text.substr(start, dot + 1 - start));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

std::size_t count_sentences(std::string_view text) {
  std::size_t count = 0;
  bool in_code = false;
  bool pending = false;  // non-space text since the last sentence end
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '`') {
      in_code = !in_code;
      pending = true;
      continue;
    }
    if (in_code) continue;
    if (c == '.' || c == '!' || c == '?') {
      std::size_t end = i;
      while (end + 1 < text.size() &&
             (text[end + 1] == '.' || text[end + 1] == '!' || text[end + 1] == '?')) {
        ++end;
      }
      const bool boundary =
          end + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[end + 1]));
      if (boundary && pending && !(c == '.' && end == i && ends_with_abbreviation(text, i))) {
        ++count;
        pending = false;
      }
      i = end;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) pending = true;
  }
  if (pending) ++count;
  return count;
}

std::optional<ThinkingCapFinding> check_thinking_cap(std::string_view thinking, std::size_t cap) {
  const std::size_t n = count_sentences(thinking);
  if (n <= cap) return std::nullopt;
  return ThinkingCapFinding{n, cap,
                            "thinking has " + std::to_string(n) + " sentences (cap " +
                                std::to_string(cap) + ")"};
}

}  // namespace specjudge
