// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "specjudge/error.hpp"
#include "util.hpp"

namespace specjudge {

using nlohmann::json;

namespace {

bool is_correct(const SampleRecord& s) {
  return (*s.verdict == Verdict::kBad) == (s.label == Label::kVulnerable);
}

double ratio(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(const std::vector<SampleRecord>& samples) {
  ConfusionMatrix cm;
  for (const auto& s : samples) {
    if (!s.verdict) {
      throw Error(ErrorCode::kMissingVerdict, "sample " + s.sample_id + " has no verdict");
    }
    const bool flagged = *s.verdict == Verdict::kBad;
    if (s.label == Label::kVulnerable) {
      ++(flagged ? cm.tp : cm.fn);
    } else {
      ++(flagged ? cm.fp : cm.tn);
    }
  }
  return cm;
}

std::vector<SampleRecord> judged_samples(const std::vector<SampleRecord>& samples) {
  std::vector<SampleRecord> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [](const SampleRecord& s) { return s.verdict.has_value(); });
  return out;
}

ScoreReport score(const ConfusionMatrix& cm, std::size_t pair_correct, std::size_t pairs_valid) {
  ScoreReport r;
  r.confusion = cm;
  r.precision = ratio(cm.tp, cm.tp + cm.fp, r.precision_undefined);
  r.recall = ratio(cm.tp, cm.tp + cm.fn, r.recall_undefined);
  const double pr = r.precision + r.recall;
  r.f1_undefined = pr == 0.0;
  r.f1 = r.f1_undefined ? 0.0 : 2.0 * r.precision * r.recall / pr;
  bool unused = false;
  r.accuracy = ratio(cm.tp + cm.tn, cm.total(), unused);
  r.pair_correct = pair_correct;
  r.pairs_valid = pairs_valid;
  r.pc_rate = ratio(pair_correct, pairs_valid, r.pc_rate_undefined);
  return r;
}

PairCorrect pair_correct(const std::vector<PairArtifact>& artifacts) {
  PairCorrect pc;
  pc.pairs_total = artifacts.size();
  for (const auto& a : artifacts) {
    if (a.status != PairStatus::kComplete || !a.verdict_vulnerable || !a.verdict_patched) continue;
    ++pc.pairs_valid;
    if (a.verdict_vulnerable->verdict == Verdict::kBad && a.verdict_patched->verdict == Verdict::kGood) {
      ++pc.count;
    }
  }
  return pc;
}

ScoreReport score_run(const RunResult& run, bool strict_denominator) {
  const PairCorrect pc = pair_correct(run.artifacts);
  return score(confusion(judged_samples(run.samples)), pc.count,
               strict_denominator ? pc.pairs_total : pc.pairs_valid);
}

// ---------------------------------------------------------------------------

std::vector<SampleError> sample_errors(const std::vector<SampleRecord>& samples) {
  std::vector<SampleError> out;
  for (const auto& s : samples) {
    if (!s.verdict || is_correct(s)) continue;
    out.push_back({s.sample_id, s.cwe_ids,
                   s.label == Label::kVulnerable ? ErrorKind::kFalseNegative
                                                 : ErrorKind::kFalsePositive});
  }
  return out;
}

CweErrorBreakdown cwe_breakdown(const std::vector<SampleError>& errors, std::size_t top_n) {
  CweErrorBreakdown out;
  std::map<std::string, CweRow> rows;
  for (const auto& e : errors) {
    const bool fp = e.kind == ErrorKind::kFalsePositive;
    ++(fp ? out.samples_fp : out.samples_fn);
    std::set<std::string> ids(e.cwe_ids.begin(), e.cwe_ids.end());
    if (ids.empty()) ids.insert(std::string(kNoCweRow));
    for (const auto& id : ids) {
      CweRow& row = rows[id];
      row.cwe_id = id;
      ++(fp ? row.fp : row.fn);
    }
  }
  for (auto& [id, row] : rows) out.rows.push_back(row);
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const CweRow& a, const CweRow& b) {
    return a.fp + a.fn > b.fp + b.fn;
  });
  if (top_n > 0 && out.rows.size() > top_n) {
    CweRow others{std::string(kOthersRow), 0, 0};
    for (std::size_t i = top_n; i < out.rows.size(); ++i) {
      others.fp += out.rows[i].fp;
      others.fn += out.rows[i].fn;
    }
    out.rows.resize(top_n);
    out.rows.push_back(others);
  }
  return out;
}

CorrectionReport correction_analysis(const std::vector<SampleRecord>& blind,
                                     const std::vector<SampleRecord>& feature) {
  std::unordered_map<std::string, const SampleRecord*> blind_by_id;
  for (const auto& s : blind) {
    if (s.verdict) blind_by_id.emplace(s.sample_id, &s);
  }
  CorrectionReport r;
  std::set<std::string> seen;
  for (const auto& f : feature) {
    if (!f.verdict) continue;
    auto it = blind_by_id.find(f.sample_id);
    if (it == blind_by_id.end()) {
      ++r.only_feature;
      continue;
    }
    if (!seen.insert(f.sample_id).second) continue;
    ++r.shared;
    const bool was = is_correct(*it->second);
    const bool now = is_correct(f);
    if (!was && now) {
      ++r.corrected;
    } else if (was && !now) {
      ++r.regressed;
    } else {
      ++r.unchanged;
    }
  }
  r.only_blind = blind_by_id.size() - r.shared;
  if (r.shared == 0) throw Error(ErrorCode::kDisjointRuns, "runs share no judged sample");
  if (r.only_blind > 0 || r.only_feature > 0) {
    spdlog::warn("correction analysis uses the {} shared samples ({} blind-only, {} feature-only)",
                 r.shared, r.only_blind, r.only_feature);
  }
  r.ratio = ratio(r.corrected, r.regressed, r.ratio_undefined);
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  // First column left-aligned, the rest right-aligned, two spaces apart.
  std::string render() const {
    std::vector<std::size_t> width;
    for (const auto& row : rows_) {
      if (width.size() < row.size()) width.resize(row.size(), 0);
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (const auto& row : rows_) {
      std::string line;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c > 0) line += "  ";
        const std::size_t pad = width[c] - row[c].size();
        if (c == 0) {
          line += row[c] + std::string(pad, ' ');
        } else {
          line += std::string(pad, ' ') + row[c];
        }
      }
      out += std::string(rtrim(line)) + "\n";
    }
    return out;
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string f3(double v) { return fixed(v, 3); }
std::string opt3(const std::optional<double>& v) { return v ? f3(*v) : "-"; }
std::string delta(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return "-";
  const double d = *a - *b;
  return (d >= 0 ? "+" : "") + fixed(d, 3);
}
std::string flagged(double v, bool undefined) { return undefined ? "n/a" : f3(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string render_table(const Report& r) {
  std::vector<std::string> sections;

  if (!r.scores.empty()) {
    TextTable t({"run", "P", "R", "F1", "Acc", "TP", "FP", "FN", "TN", "P-C", "valid", "P-C%"});
    for (const auto& [name, s] : r.scores) {
      t.add({name, flagged(s.precision, s.precision_undefined), flagged(s.recall, s.recall_undefined),
             flagged(s.f1, s.f1_undefined), f3(s.accuracy), num(s.confusion.tp), num(s.confusion.fp),
             num(s.confusion.fn), num(s.confusion.tn), num(s.pair_correct), num(s.pairs_valid),
             s.pc_rate_undefined ? "n/a" : fixed(s.pc_rate * 100.0, 1)});
    }
    sections.push_back("Scores\n" + t.render());
  }

  if (!r.tiers.empty()) {
    TextTable t({"judge", "RAW", "Blind", "Feature", "F-RAW", "F-Blind"});
    for (const auto& row : r.tiers) {
      t.add({row.label, opt3(row.raw), opt3(row.blind), opt3(row.feature),
             delta(row.feature, row.raw), delta(row.feature, row.blind)});
    }
    sections.push_back("Tier ablation (F1)\n" + t.render());
  }

  if (!r.matrix.empty()) {
    std::vector<std::string> engineers;
    std::vector<std::string> judges;
    for (const auto& e : r.matrix) {
      if (std::find(engineers.begin(), engineers.end(), e.engineer) == engineers.end()) {
        engineers.push_back(e.engineer);
      }
      if (std::find(judges.begin(), judges.end(), e.judge) == judges.end()) judges.push_back(e.judge);
    }
    std::vector<std::string> header{"engineer \\ judge"};
    header.insert(header.end(), judges.begin(), judges.end());
    TextTable t(header);
    for (const auto& eng : engineers) {
      std::vector<std::string> row{eng};
      for (const auto& judge : judges) {
        auto it = std::find_if(r.matrix.begin(), r.matrix.end(), [&](const MatrixEntry& e) {
          return e.engineer == eng && e.judge == judge;
        });
        if (it == r.matrix.end()) {
          row.push_back("-");
        } else {
          row.push_back(it->error ? "ERR" : opt3(it->f1));
        }
      }
      t.add(std::move(row));
    }
    std::string text = "Cross-model matrix (F1)\n" + t.render();
    for (const auto& e : r.matrix) {
      if (e.error) text += fmt::format("  ERR ({}, {}): {}\n", e.engineer, e.judge, *e.error);
    }
    sections.push_back(std::move(text));
  }

  if (r.cwe) {
    TextTable t({"CWE", "FP", "FN"});
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (const auto& row : r.cwe->rows) {
      t.add({row.cwe_id, num(row.fp), num(row.fn)});
      fp += row.fp;
      fn += row.fn;
    }
    t.add({"Total (incidences)", num(fp), num(fn)});
    t.add({"Total (samples)", num(r.cwe->samples_fp), num(r.cwe->samples_fn)});
    sections.push_back("Errors by CWE\n" + t.render());
  }

  if (r.corrections) {
    const auto& c = *r.corrections;
    TextTable t({"corrected", "regressed", "unchanged", "shared", "ratio"});
    t.add({num(c.corrected), num(c.regressed), num(c.unchanged), num(c.shared),
           c.ratio_undefined ? "n/a" : fixed(c.ratio, 2)});
    std::string text = "Blind to Feature corrections\n" + t.render();
    if (c.only_blind > 0 || c.only_feature > 0) {
      text += fmt::format("  unmatched samples: {} blind-only, {} feature-only\n", c.only_blind,
                          c.only_feature);
    }
    sections.push_back(std::move(text));
  }

  if (r.validation) {
    const auto& v = *r.validation;
    TextTable t({"pairs", "samples", "vulnerable", "benign", "violations"});
    t.add({num(v.pairs), num(v.samples), num(v.vulnerable), num(v.benign), num(v.violations.size())});
    std::string text = "Corpus validation\n" + t.render();
    if (!v.cwe_frequency.empty()) {
      std::vector<std::pair<std::string, std::size_t>> freq(v.cwe_frequency.begin(),
                                                            v.cwe_frequency.end());
      std::stable_sort(freq.begin(), freq.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      TextTable ct({"CWE", "samples"});
      for (const auto& [id, n] : freq) ct.add({id, num(n)});
      text += ct.render();
    }
    for (const auto& violation : v.violations) text += "  violation: " + violation + "\n";
    sections.push_back(std::move(text));
  }

  if (r.double_standards) {
    TextTable t({"project", "good", "bad", "similarity", "CVE (good)", "CVE (bad)"});
    for (const auto& h : *r.double_standards) {
      t.add({h.project, h.sample_good, h.sample_bad, f3(h.similarity), h.cve_good, h.cve_bad});
    }
    sections.push_back(fmt::format("Double standards ({} hits)\n", r.double_standards->size()) +
                       t.render());
  }

  return join(sections, "\n");
}

json opt_double(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_opt_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string render_machine(const Report& r) {
  std::vector<json> lines;
  for (const auto& [name, s] : r.scores) {
    lines.push_back({{"kind", "score"},
                     {"name", name},
                     {"precision", s.precision},
                     {"recall", s.recall},
                     {"f1", s.f1},
                     {"accuracy", s.accuracy},
                     {"precision_undefined", s.precision_undefined},
                     {"recall_undefined", s.recall_undefined},
                     {"f1_undefined", s.f1_undefined},
                     {"pair_correct", s.pair_correct},
                     {"pairs_valid", s.pairs_valid},
                     {"pc_rate", s.pc_rate},
                     {"pc_rate_undefined", s.pc_rate_undefined},
                     {"tp", s.confusion.tp},
                     {"fp", s.confusion.fp},
                     {"fn", s.confusion.fn},
                     {"tn", s.confusion.tn}});
  }
  for (const auto& t : r.tiers) {
    lines.push_back({{"kind", "tier"},
                     {"label", t.label},
                     {"raw", opt_double(t.raw)},
                     {"blind", opt_double(t.blind)},
                     {"feature", opt_double(t.feature)}});
  }
  for (const auto& m : r.matrix) {
    lines.push_back({{"kind", "matrix"},
                     {"engineer", m.engineer},
                     {"judge", m.judge},
                     {"f1", opt_double(m.f1)},
                     {"error", m.error ? json(*m.error) : json(nullptr)}});
  }
  if (r.cwe) {
    lines.push_back({{"kind", "cwe_totals"},
                     {"samples_fp", r.cwe->samples_fp},
                     {"samples_fn", r.cwe->samples_fn}});
    for (const auto& row : r.cwe->rows) {
      lines.push_back({{"kind", "cwe"}, {"cwe_id", row.cwe_id}, {"fp", row.fp}, {"fn", row.fn}});
    }
  }
  if (r.corrections) {
    const auto& c = *r.corrections;
    lines.push_back({{"kind", "corrections"},
                     {"corrected", c.corrected},
                     {"regressed", c.regressed},
                     {"unchanged", c.unchanged},
                     {"shared", c.shared},
                     {"ratio", c.ratio},
                     {"ratio_undefined", c.ratio_undefined},
                     {"only_blind", c.only_blind},
                     {"only_feature", c.only_feature}});
  }
  if (r.validation) {
    const auto& v = *r.validation;
    lines.push_back({{"kind", "validation"},
                     {"pairs", v.pairs},
                     {"samples", v.samples},
                     {"vulnerable", v.vulnerable},
                     {"benign", v.benign},
                     {"cwe_frequency", v.cwe_frequency},
                     {"violations", v.violations}});
  }
  if (r.double_standards) {
    lines.push_back({{"kind", "double_standards"}, {"count", r.double_standards->size()}});
    for (const auto& h : *r.double_standards) {
      lines.push_back({{"kind", "double_standard"},
                       {"project", h.project},
                       {"sample_good", h.sample_good},
                       {"sample_bad", h.sample_bad},
                       {"similarity", h.similarity},
                       {"cve_good", h.cve_good},
                       {"cve_bad", h.cve_bad}});
    }
  }
  std::string out;
  for (const auto& line : lines) out += dump_compact(line) + "\n";
  return out;
}

}  // namespace

ReportFormat report_format_from_string(std::string_view s) {
  const std::string lower = to_lower(s);
  if (lower == "table" || lower == "text") return ReportFormat::kTable;
  if (lower == "machine" || lower == "jsonl") return ReportFormat::kMachine;
  throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + std::string(s) + "'");
}

std::string render_report(const Report& report, ReportFormat format) {
  return format == ReportFormat::kTable ? render_table(report) : render_machine(report);
}

Report read_machine_report(std::string_view text) {
  Report r;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "score") {
        NamedScore n;
        n.name = j.at("name").get<std::string>();
        ScoreReport& s = n.score;
        s.precision = j.at("precision").get<double>();
        s.recall = j.at("recall").get<double>();
        s.f1 = j.at("f1").get<double>();
        s.accuracy = j.at("accuracy").get<double>();
        s.precision_undefined = j.at("precision_undefined").get<bool>();
        s.recall_undefined = j.at("recall_undefined").get<bool>();
        s.f1_undefined = j.at("f1_undefined").get<bool>();
        s.pair_correct = j.at("pair_correct").get<std::size_t>();
        s.pairs_valid = j.at("pairs_valid").get<std::size_t>();
        s.pc_rate = j.at("pc_rate").get<double>();
        s.pc_rate_undefined = j.at("pc_rate_undefined").get<bool>();
        s.confusion = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                       j.at("fn").get<std::size_t>(), j.at("tn").get<std::size_t>()};
        r.scores.push_back(std::move(n));
      } else if (kind == "tier") {
        r.tiers.push_back({j.at("label").get<std::string>(), read_opt_double(j, "raw"),
                           read_opt_double(j, "blind"), read_opt_double(j, "feature")});
      } else if (kind == "matrix") {
        MatrixEntry m{j.at("engineer").get<std::string>(), j.at("judge").get<std::string>(),
                      read_opt_double(j, "f1"), std::nullopt};
        if (!j.at("error").is_null()) m.error = j.at("error").get<std::string>();
        r.matrix.push_back(std::move(m));
      } else if (kind == "cwe_totals") {
        if (!r.cwe) r.cwe.emplace();
        r.cwe->samples_fp = j.at("samples_fp").get<std::size_t>();
        r.cwe->samples_fn = j.at("samples_fn").get<std::size_t>();
      } else if (kind == "cwe") {
        if (!r.cwe) r.cwe.emplace();
        r.cwe->rows.push_back({j.at("cwe_id").get<std::string>(), j.at("fp").get<std::size_t>(),
                               j.at("fn").get<std::size_t>()});
      } else if (kind == "corrections") {
        CorrectionReport c;
        c.corrected = j.at("corrected").get<std::size_t>();
        c.regressed = j.at("regressed").get<std::size_t>();
        c.unchanged = j.at("unchanged").get<std::size_t>();
        c.shared = j.at("shared").get<std::size_t>();
        c.ratio = j.at("ratio").get<double>();
        c.ratio_undefined = j.at("ratio_undefined").get<bool>();
        c.only_blind = j.at("only_blind").get<std::size_t>();
        c.only_feature = j.at("only_feature").get<std::size_t>();
        r.corrections = c;
      } else if (kind == "validation") {
        ValidationReport v;
        v.pairs = j.at("pairs").get<std::size_t>();
        v.samples = j.at("samples").get<std::size_t>();
        v.vulnerable = j.at("vulnerable").get<std::size_t>();
        v.benign = j.at("benign").get<std::size_t>();
        v.cwe_frequency = j.at("cwe_frequency").get<std::map<std::string, std::size_t>>();
        v.violations = j.at("violations").get<std::vector<std::string>>();
        r.validation = std::move(v);
      } else if (kind == "double_standards") {
        if (!r.double_standards) r.double_standards.emplace();
      } else if (kind == "double_standard") {
        if (!r.double_standards) r.double_standards.emplace();
        r.double_standards->push_back({j.at("project").get<std::string>(),
                                       j.at("sample_good").get<std::string>(),
                                       j.at("sample_bad").get<std::string>(),
                                       j.at("similarity").get<double>(),
                                       j.at("cve_good").get<std::string>(),
                                       j.at("cve_bad").get<std::string>()});
      } else {
        throw ParseError(line_no, "unknown report record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return r;
}

}  // namespace specjudge
