// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace specjudge {

enum class Label { kVulnerable, kBenign };

std::string_view to_string(Label label);

struct CodeSample {
  std::string sample_id;
  std::string project;
  std::string commit_id;
  std::string function_source;
  Label label = Label::kBenign;
  std::vector<std::string> cwe_ids;
  std::optional<std::string> cve_id;
  std::optional<std::string> cve_description;
  std::optional<std::string> commit_message;
  /// Source fields that are not part of the mapping, kept verbatim.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const CodeSample&) const = default;
};

struct CommitPair {
  std::string pair_id;
  CodeSample vulnerable;
  CodeSample patched;

  bool operator==(const CommitPair&) const = default;
};

/// Source-field name for each canonical field. Defaults follow the field names
/// used by the PrimeVul JSONL releases.
struct FieldMapping {
  std::string sample_id = "idx";
  std::string project = "project";
  std::string commit_id = "commit_id";
  std::string function_source = "func";
  std::string label = "target";
  std::string cwe_ids = "cwe";
  std::string cve_id = "cve";
  std::string cve_description = "cve_desc";
  std::string commit_message = "commit_message";
  /// Canonical field whose value groups samples into pairs.
  std::string pair_key = "commit_id";

  bool operator==(const FieldMapping&) const = default;

  static FieldMapping from_json(const nlohmann::json& j);
  static FieldMapping load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct Provenance {
  std::string source_path;
  std::string loaded_at;  // ISO-8601 UTC
};

struct Corpus {
  std::vector<CommitPair> pairs;
  Provenance provenance;
  FieldMapping field_mapping_used;

  std::size_t sample_count() const { return pairs.size() * 2; }
};

/// Reads line-delimited flat objects and groups them into commit pairs.
/// Within one pairing-key group, samples are matched in file order: each
/// sample pairs with the earliest still-unmatched sample of opposite label.
Corpus load_corpus(const std::filesystem::path& path, const FieldMapping& mapping = {});
Corpus parse_corpus(std::string_view text, const FieldMapping& mapping = {},
                    std::string source_name = "<memory>");

/// Writes the corpus back using the source field names of `mapping`, so that
/// `load_corpus` with the same mapping reproduces the same pairs.
std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Stable content digest over all pairs (hex SHA-256).
std::string corpus_digest(const Corpus& corpus);

struct ValidationReport {
  std::size_t pairs = 0;
  std::size_t samples = 0;
  std::size_t vulnerable = 0;
  std::size_t benign = 0;
  std::map<std::string, std::size_t> cwe_frequency;
  std::vector<std::string> violations;
};

ValidationReport validate_corpus(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Double-standard detection

/// Ratcliff/Obershelp similarity: 2*M / (|a| + |b|), M the total size of the
/// matching blocks found by recursive longest-common-substring matching. The
/// two arguments are evaluated in a canonical order so the result is
/// symmetric. Two empty strings compare as 1.0.
double sequence_similarity(std::string_view a, std::string_view b);

/// Total matched characters M for the ordered pair (a, b) without the
/// canonical reordering. Exposed for tests.
std::size_t matched_characters(std::string_view a, std::string_view b);

/// Cheap upper bound on sequence_similarity from character multisets.
double similarity_upper_bound(std::string_view a, std::string_view b);

namespace detail {
/// False only when no ordering of (a, b) can reach a ratio above `threshold`.
bool may_exceed(std::string_view a, std::string_view b, double threshold);
/// Longest common subsequence length (bit-parallel).
std::size_t lcs(std::string_view a, std::string_view b);
}  // namespace detail

struct DoubleStandardHit {
  std::string project;
  std::string sample_good;
  std::string sample_bad;
  double similarity = 0.0;
  std::string cve_good;
  std::string cve_bad;
};

inline constexpr double kDefaultDoubleStandardThreshold = 0.75;

std::vector<DoubleStandardHit> find_double_standards(
    const Corpus& corpus, double threshold = kDefaultDoubleStandardThreshold,
    unsigned workers = 1);

}  // namespace specjudge
