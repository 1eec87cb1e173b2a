// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "specjudge/digest.hpp"
#include "specjudge/error.hpp"
#include "util.hpp"

namespace specjudge {

using nlohmann::json;

std::string_view to_string(Label label) {
  return label == Label::kVulnerable ? "vulnerable" : "benign";
}

// ---------------------------------------------------------------------------
// Field mapping

namespace {

struct MappedField {
  const char* canonical;
  std::string FieldMapping::*member;
};

constexpr MappedField kMappedFields[] = {
    {"sample_id", &FieldMapping::sample_id},
    {"project", &FieldMapping::project},
    {"commit_id", &FieldMapping::commit_id},
    {"function_source", &FieldMapping::function_source},
    {"label", &FieldMapping::label},
    {"cwe_ids", &FieldMapping::cwe_ids},
    {"cve_id", &FieldMapping::cve_id},
    {"cve_description", &FieldMapping::cve_description},
    {"commit_message", &FieldMapping::commit_message},
    {"pair_key", &FieldMapping::pair_key},
};

}  // namespace

FieldMapping FieldMapping::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "field mapping must be an object");
  FieldMapping mapping;
  for (const auto& [key, value] : j.items()) {
    auto it = std::find_if(std::begin(kMappedFields), std::end(kMappedFields),
                           [&](const MappedField& f) { return key == f.canonical; });
    if (it == std::end(kMappedFields)) {
      throw Error(ErrorCode::kConfig, "unknown canonical field in mapping: " + key);
    }
    if (!value.is_string() || value.get<std::string>().empty()) {
      throw Error(ErrorCode::kConfig, "mapping for '" + key + "' must be a non-empty string");
    }
    mapping.*(it->member) = value.get<std::string>();
  }
  return mapping;
}

FieldMapping FieldMapping::load(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

json FieldMapping::to_json() const {
  json j = json::object();
  for (const auto& f : kMappedFields) j[f.canonical] = this->*(f.member);
  return j;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string required_string(const json& record, const std::string& field,
                            const char* canonical, std::size_t line, bool allow_number) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": missing field '" +
                                        field + "' (" + canonical + ")");
  }
  if (it->is_string()) return it->get<std::string>();
  if (allow_number && it->is_number_integer()) return std::to_string(it->get<long long>());
  throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": field '" + field +
                                      "' (" + canonical + ") has unexpected type");
}

std::optional<std::string> optional_string(const json& record, const std::string& field,
                                           std::size_t line) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  throw Error(ErrorCode::kSchema,
              "line " + std::to_string(line) + ": field '" + field + "' must be a string");
}

Label parse_label(const json& value, const std::string& field, std::size_t line) {
  if (value.is_boolean()) return value.get<bool>() ? Label::kVulnerable : Label::kBenign;
  if (value.is_number_integer()) {
    const auto v = value.get<long long>();
    if (v == 1) return Label::kVulnerable;
    if (v == 0) return Label::kBenign;
  }
  if (value.is_string()) {
    const std::string s = to_lower(trim(value.get<std::string>()));
    if (s == "1" || s == "vulnerable" || s == "bad") return Label::kVulnerable;
    if (s == "0" || s == "benign" || s == "good" || s == "patched") return Label::kBenign;
  }
  throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": field '" + field +
                                      "' is not a recognised label: " + value.dump());
}

std::vector<std::string> parse_cwes(const json& record, const std::string& field,
                                    std::size_t line) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return {};
  if (it->is_string()) return {it->get<std::string>()};
  if (it->is_array()) {
    std::vector<std::string> out;
    for (const auto& v : *it) {
      if (!v.is_string()) {
        throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": field '" + field +
                                            "' must hold strings");
      }
      out.push_back(v.get<std::string>());
    }
    return out;
  }
  throw Error(ErrorCode::kSchema,
              "line " + std::to_string(line) + ": field '" + field + "' has unexpected type");
}

CodeSample sample_from_record(const json& record, const FieldMapping& m, std::size_t line) {
  CodeSample s;
  s.sample_id = required_string(record, m.sample_id, "sample_id", line, true);
  s.project = required_string(record, m.project, "project", line, false);
  s.commit_id = required_string(record, m.commit_id, "commit_id", line, false);
  s.function_source = required_string(record, m.function_source, "function_source", line, false);
  if (s.function_source.empty()) {
    throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": empty function source");
  }
  auto label = record.find(m.label);
  if (label == record.end() || label->is_null()) {
    throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": missing field '" +
                                        m.label + "' (label)");
  }
  s.label = parse_label(*label, m.label, line);
  s.cwe_ids = parse_cwes(record, m.cwe_ids, line);
  s.cve_id = optional_string(record, m.cve_id, line);
  s.cve_description = optional_string(record, m.cve_description, line);
  s.commit_message = optional_string(record, m.commit_message, line);

  const std::set<std::string> mapped = {m.sample_id, m.project, m.commit_id,
                                        m.function_source, m.label, m.cwe_ids,
                                        m.cve_id, m.cve_description, m.commit_message};
  for (const auto& [key, value] : record.items()) {
    if (!mapped.contains(key)) s.extra[key] = value;
  }
  return s;
}

std::string pairing_key(const CodeSample& s, const FieldMapping& m) {
  const std::string& key = m.pair_key;
  if (key == "commit_id") return s.commit_id;
  if (key == "project") return s.project;
  if (key == "cve_id") return s.cve_id.value_or("");
  if (key == "sample_id") return s.sample_id;
  auto it = s.extra.find(key);
  if (it == s.extra.end()) {
    throw Error(ErrorCode::kSchema,
                "sample " + s.sample_id + " lacks pairing key field '" + key + "'");
  }
  return it->is_string() ? it->get<std::string>() : it->dump();
}

std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Corpus parse_corpus(std::string_view text, const FieldMapping& mapping, std::string source_name) {
  std::vector<CodeSample> samples;
  std::unordered_set<std::string> seen_ids;
  std::vector<std::string> duplicates;

  std::size_t line_no = 0;
  for (const std::string& raw : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "record is not an object");
    CodeSample s = sample_from_record(record, mapping, line_no);
    if (!seen_ids.insert(s.sample_id).second) duplicates.push_back(s.sample_id);
    samples.push_back(std::move(s));
  }
  if (!duplicates.empty()) {
    throw PairingError("duplicate sample_id: " + join(duplicates, ", "), duplicates);
  }

  // Group by pairing key in file order, then match FIFO across labels.
  std::vector<std::string> key_order;
  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::string key = pairing_key(samples[i], mapping);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) key_order.push_back(key);
    it->second.push_back(i);
  }

  struct PendingPair {
    std::size_t first;  // file position of the earlier sample
    std::size_t vulnerable;
    std::size_t patched;
    std::string key;
    std::size_t ordinal;
  };
  std::vector<PendingPair> pending;
  std::vector<std::string> orphans;
  for (const auto& key : key_order) {
    std::deque<std::size_t> open_vulnerable;
    std::deque<std::size_t> open_benign;
    std::size_t ordinal = 0;
    for (std::size_t idx : groups[key]) {
      const bool vulnerable = samples[idx].label == Label::kVulnerable;
      auto& opposite = vulnerable ? open_benign : open_vulnerable;
      if (opposite.empty()) {
        (vulnerable ? open_vulnerable : open_benign).push_back(idx);
        continue;
      }
      const std::size_t other = opposite.front();
      opposite.pop_front();
      pending.push_back({std::min(idx, other), vulnerable ? idx : other,
                         vulnerable ? other : idx, key, ordinal++});
    }
    for (std::size_t idx : open_vulnerable) orphans.push_back(samples[idx].sample_id);
    for (std::size_t idx : open_benign) orphans.push_back(samples[idx].sample_id);
  }
  if (!orphans.empty()) {
    throw PairingError("unpaired samples: " + join(orphans, ", "), orphans);
  }
  std::sort(pending.begin(), pending.end(),
            [](const PendingPair& x, const PendingPair& y) { return x.first < y.first; });

  Corpus corpus;
  corpus.field_mapping_used = mapping;
  corpus.provenance = {std::move(source_name), utc_now_iso()};
  corpus.pairs.reserve(pending.size());
  for (const auto& p : pending) {
    CommitPair pair;
    pair.pair_id = p.ordinal == 0 ? p.key : p.key + "#" + std::to_string(p.ordinal + 1);
    pair.vulnerable = samples[p.vulnerable];
    pair.patched = samples[p.patched];
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const FieldMapping& mapping) {
  return parse_corpus(read_file(path), mapping, path.string());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json sample_to_record(const CodeSample& s, const FieldMapping& m) {
  json j = s.extra.is_object() ? s.extra : json::object();
  j[m.sample_id] = s.sample_id;
  j[m.project] = s.project;
  j[m.commit_id] = s.commit_id;
  j[m.function_source] = s.function_source;
  j[m.label] = s.label == Label::kVulnerable ? 1 : 0;
  j[m.cwe_ids] = s.cwe_ids;
  j[m.cve_id] = s.cve_id ? json(*s.cve_id) : json(nullptr);
  j[m.cve_description] = s.cve_description ? json(*s.cve_description) : json(nullptr);
  j[m.commit_message] = s.commit_message ? json(*s.commit_message) : json(nullptr);
  return j;
}

}  // namespace

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  const FieldMapping& m = corpus.field_mapping_used;
  for (const auto& pair : corpus.pairs) {
    out += dump_compact(sample_to_record(pair.vulnerable, m)) + "\n";
    out += dump_compact(sample_to_record(pair.patched, m)) + "\n";
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, serialize_corpus(corpus));
}

std::string corpus_digest(const Corpus& corpus) {
  FieldMapping canonical;
  Corpus copy{corpus.pairs, {}, canonical};
  return sha256_hex(serialize_corpus(copy));
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_corpus(const Corpus& corpus) {
  ValidationReport report;
  report.pairs = corpus.pairs.size();
  std::unordered_set<std::string> ids;
  for (const auto& pair : corpus.pairs) {
    for (const CodeSample* s : {&pair.vulnerable, &pair.patched}) {
      ++report.samples;
      (s->label == Label::kVulnerable ? report.vulnerable : report.benign) += 1;
      for (const auto& cwe : s->cwe_ids) ++report.cwe_frequency[cwe];
      if (s->function_source.empty()) {
        report.violations.push_back(pair.pair_id + ": sample " + s->sample_id +
                                    " has empty function source");
      }
      if (!ids.insert(s->sample_id).second) {
        report.violations.push_back(pair.pair_id + ": sample " + s->sample_id +
                                    " appears in more than one pair");
      }
    }
    if (pair.vulnerable.label != Label::kVulnerable || pair.patched.label != Label::kBenign) {
      report.violations.push_back(pair.pair_id + ": labels are " +
                                  std::string(to_string(pair.vulnerable.label)) + "/" +
                                  std::string(to_string(pair.patched.label)) +
                                  ", expected vulnerable/benign");
    }
    if (corpus.field_mapping_used.pair_key == "commit_id" &&
        pair.vulnerable.commit_id != pair.patched.commit_id) {
      report.violations.push_back(pair.pair_id + ": samples disagree on commit_id");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Double standards

std::vector<DoubleStandardHit> find_double_standards(const Corpus& corpus, double threshold,
                                                     unsigned workers) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1]");
  }
  struct Entry {
    const CodeSample* sample;
    std::size_t pair_index;
  };
  std::map<std::string, std::pair<std::vector<Entry>, std::vector<Entry>>> by_project;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    for (const CodeSample* s : {&corpus.pairs[i].vulnerable, &corpus.pairs[i].patched}) {
      auto& [good, bad] = by_project[s->project];
      (s->label == Label::kBenign ? good : bad).push_back({s, i});
    }
  }

  struct Candidate {
    const std::string* project;
    Entry good;
    Entry bad;
  };
  std::vector<Candidate> candidates;
  for (const auto& [project, lists] : by_project) {
    for (const Entry& g : lists.first) {
      for (const Entry& b : lists.second) {
        if (g.pair_index == b.pair_index) continue;
        if (!g.sample->cve_id || !b.sample->cve_id) continue;
        if (*g.sample->cve_id == *b.sample->cve_id) continue;
        candidates.push_back({&project, g, b});
      }
    }
  }

  std::vector<DoubleStandardHit> hits;
  std::mutex hits_mutex;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < candidates.size(); i = next++) {
      const Candidate& c = candidates[i];
      const std::string_view good = c.good.sample->function_source;
      const std::string_view bad = c.bad.sample->function_source;
      if (!detail::may_exceed(good, bad, threshold)) continue;
      const double sim = sequence_similarity(good, bad);
      if (sim <= threshold) continue;
      std::lock_guard lock(hits_mutex);
      hits.push_back({*c.project, c.good.sample->sample_id, c.bad.sample->sample_id, sim,
                      *c.good.sample->cve_id, *c.bad.sample->cve_id});
    }
  };
  const unsigned n = std::max(1u, workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
  }
  std::sort(hits.begin(), hits.end(), [](const DoubleStandardHit& x, const DoubleStandardHit& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    if (x.project != y.project) return x.project < y.project;
    if (x.sample_good != y.sample_good) return x.sample_good < y.sample_good;
    return x.sample_bad < y.sample_bad;
  });
  return hits;
}

}  // namespace specjudge
