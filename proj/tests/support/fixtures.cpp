// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "fixtures.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>

#include "specjudge/error.hpp"

namespace specjudge::fixture {

std::string vulnerable_marker(std::size_t i) { return fmt::format("@V{}@", i); }
std::string patched_marker(std::size_t i) { return fmt::format("@P{}@", i); }

namespace {

const char* const kProjects[] = {"libfoo", "barkit", "quxdb"};
const char* const kCwes[] = {"CWE-787", "CWE-125", "CWE-476", "CWE-190"};

std::string vulnerable_source(std::size_t i) {
  return fmt::format(
      "static int parse_chunk_{0}(struct ctx *c, const uint8_t *buf, size_t len) {{\n"
      "  /* {1} */\n"
      "  uint8_t tmp[{2}];\n"
      "  size_t n = read_len_{0}(buf);\n"
      "  memcpy(tmp, buf + 4, n);\n"
      "  return consume_{0}(c, tmp, n);\n"
      "}}\n",
      i, vulnerable_marker(i), 16 + i % 48);
}

std::string patched_source(std::size_t i) {
  return fmt::format(
      "static int parse_chunk_{0}(struct ctx *c, const uint8_t *buf, size_t len) {{\n"
      "  /* {1} */\n"
      "  uint8_t tmp[{2}];\n"
      "  size_t n = read_len_{0}(buf);\n"
      "  if (len < 4 || n > sizeof(tmp) || n > len - 4)\n"
      "    return -EINVAL;\n"
      "  memcpy(tmp, buf + 4, n);\n"
      "  return consume_{0}(c, tmp, n);\n"
      "}}\n",
      i, patched_marker(i), 16 + i % 48);
}

std::string slicer_reply(std::size_t i) {
  return fmt::format(
      "<THINKING>The copy length comes from the input. The patch bounds it.</THINKING>\n"
      "<SLICED_BAD_CODE>\n/* {0} */\nsize_t n = read_len_{2}(buf);\nmemcpy(tmp, buf + 4, n);\n"
      "</SLICED_BAD_CODE>\n"
      "<SLICED_GOOD_CODE>\n/* {1} */\nsize_t n = read_len_{2}(buf);\n"
      "if (len < 4 || n > sizeof(tmp) || n > len - 4) return -EINVAL;\nmemcpy(tmp, buf + 4, n);\n"
      "</SLICED_GOOD_CODE>\n",
      vulnerable_marker(i), patched_marker(i), i);
}

std::string engineer_reply(std::size_t i) {
  return fmt::format(
      "<THINKING>The copy length must fit the stack buffer.</THINKING>\n"
      "<GHERKIN>\n"
      "Feature: Bounded copy in parse_chunk_{0}\n"
      "  Scenario: Length larger than tmp is rejected\n"
      "    Given a chunk whose declared length n exceeds sizeof(tmp)\n"
      "    When parse_chunk_{0} runs\n"
      "    Then it returns -EINVAL before memcpy\n"
      "</GHERKIN>\n",
      i);
}

std::string judge_reply(bool bad) {
  return fmt::format("<THINKING>Checked the length guard before memcpy.</THINKING>\n<VERDICT>{}</VERDICT>\n",
                     bad ? "bad" : "good");
}

const std::string kMalformed = "<THINKING>I will answer in prose instead.</THINKING>\nThe code looks fine.";

}  // namespace

Corpus synthetic_corpus(std::size_t pairs) {
  Corpus corpus;
  corpus.provenance.source_path = "<synthetic>";
  for (std::size_t i = 0; i < pairs; ++i) {
    CommitPair p;
    p.pair_id = fmt::format("c{:04x}{:04x}", i * 7919 % 65536, i);
    CodeSample bad;
    bad.sample_id = std::to_string(2 * i);
    bad.project = kProjects[i % 3];
    bad.commit_id = p.pair_id;
    bad.function_source = vulnerable_source(i);
    bad.label = Label::kVulnerable;
    bad.cwe_ids = {kCwes[i % 4]};
    bad.cve_id = fmt::format("CVE-2021-{}", 10000 + i);
    bad.cve_description = fmt::format("Stack overflow in parse_chunk_{} via crafted length.", i);
    bad.commit_message = fmt::format("Validate chunk length in parse_chunk_{}", i);
    CodeSample good = bad;
    good.sample_id = std::to_string(2 * i + 1);
    good.function_source = patched_source(i);
    good.label = Label::kBenign;
    p.vulnerable = std::move(bad);
    p.patched = std::move(good);
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

std::vector<MockBackend::Rule> oracle_rules(const Corpus& corpus, const OracleScript& script) {
  std::vector<MockBackend::Rule> rules;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    rules.push_back({{"<BAD_CODE>", vulnerable_marker(i)},
                     {script.broken_slicer.count(i) ? kMalformed : slicer_reply(i)}});
    rules.push_back({{"<SLICED_BAD_CODE>", vulnerable_marker(i)},
                     {script.broken_engineer.count(i) ? kMalformed : engineer_reply(i)}});
    if (script.broken_vulnerable_judge.count(i)) {
      rules.push_back({{"<TARGET_CODE>", vulnerable_marker(i)}, {kMalformed}});
    }
    if (script.wrong_patched_verdict.count(i)) {
      rules.push_back({{"<TARGET_CODE>", patched_marker(i)}, {judge_reply(true)}});
    }
  }
  rules.push_back({{"<TARGET_CODE>", "@V"}, {judge_reply(true)}});
  rules.push_back({{"<TARGET_CODE>", "@P"}, {judge_reply(false)}});
  return rules;
}

nlohmann::json rules_to_json(const std::vector<MockBackend::Rule>& rules) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rules) out.push_back({{"contains", r.contains}, {"responses", r.responses}});
  return {{"rules", out}};
}

HarnessConfig harness_config(const std::vector<std::string>& profiles, unsigned workers) {
  nlohmann::json p = nlohmann::json::object();
  for (const auto& name : profiles) p[name] = {{"model_name", "model-" + name}};
  return HarnessConfig::from_json({{"profiles", p},
                                   {"agents",
                                    {{"slicer", profiles.front()},
                                     {"reverse_engineer", profiles.front()},
                                     {"judge", profiles.front()}}},
                                   {"workers", workers}});
}

std::string InterruptingBackend::complete(const ChatRequest& request) {
  if (calls_.fetch_add(1) >= budget_) throw Error(ErrorCode::kInterrupted, "scripted interruption");
  return inner_.complete(request);
}

std::string PerModelContracts::complete(const ChatRequest& request) {
  std::string reply = inner_.complete(request);
  if (request.stage != "reverse_engineer") return reply;
  const std::size_t pos = reply.find("Feature: ");
  if (pos != std::string::npos) reply.insert(pos + 9, "[" + request.params.model_name + "] ");
  return reply;
}

ConfusionMatrix matrix_for(double precision, double recall) {
  auto round3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
  for (std::size_t positives = 100; positives < 5000; ++positives) {
    const auto tp = static_cast<std::size_t>(std::llround(recall * static_cast<double>(positives)));
    if (round3(static_cast<double>(tp) / static_cast<double>(positives)) != recall) continue;
    const auto fp = static_cast<std::size_t>(
        std::llround(static_cast<double>(tp) / precision - static_cast<double>(tp)));
    if (round3(static_cast<double>(tp) / static_cast<double>(tp + fp)) != precision) continue;
    return {tp, fp, positives - tp, positives};
  }
  throw Error(ErrorCode::kInvalidArgument, "no matrix found");
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   fmt::format("specjudge-test-{}-{}", ::getpid(), name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFile, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

gherkin::FeatureSpec SpecGenerator::next() {
  gherkin::FeatureSpec f;
  f.title = phrase(1, 6);
  const int narrative_lines = pick(0, 3);
  for (int i = 0; i < narrative_lines; ++i) {
    if (i > 0) f.narrative += '\n';
    f.narrative += phrase(1, 8);
  }
  const int scenarios = pick(1, 5);
  for (int s = 0; s < scenarios; ++s) {
    gherkin::Scenario sc;
    sc.title = phrase(1, 5);
    const int steps = pick(1, 6);
    for (int k = 0; k < steps; ++k) {
      sc.steps.push_back({static_cast<gherkin::Keyword>(pick(0, 4)), phrase(1, 10)});
    }
    f.scenarios.push_back(std::move(sc));
  }
  return f;
}

int SpecGenerator::pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

std::string SpecGenerator::phrase(int min_words, int max_words) {
  static const char* const kWords[] = {"len",    "buf",   "must",  "be",     "less",  "than",
                                       "size_t", "NULL",  "ptr->n", "returns", "-EINVAL", "0",
                                       "Given",  "Then",  "Scenario:", "free()", "x<y", "a=b",
                                       "#tag",   "\"q\"", "ünï", "{}", "@", "|"};
  std::string out;
  const int n = pick(min_words, max_words);
  for (int i = 0; i < n; ++i) {
    std::string w = kWords[pick(0, static_cast<int>(std::size(kWords)) - 1)];
    // Lines may not open with something that parses as structure.
    if (i == 0 && (w == "Given" || w == "Then" || w == "Scenario:" || w == "#tag" || w == "@" ||
                   w == "|")) {
      w = "value";
    }
    if (i > 0) out += ' ';
    out += w;
  }
  return out;
}

std::string fuzz_text(SpecGenerator& gen, std::mt19937& rng, int i) {
  static const std::string pieces[] = {"Feature:", "Scenario:", "Given ", "When ", "Then ", "And ",
                                       "But ", "\n", "  ", "#", "Examples:", "|", "\"\"\"", "@x",
                                       "\r\n", "\t", "Background:", "\xff", std::string(1, '\0')};
  std::string text;
  if (i % 2 == 0) {
    text = gherkin::render_feature(gen.next());
    const int edits = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int e = 0; e < edits && !text.empty(); ++e) {
      const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, text.size() - 1)(rng);
      switch (rng() % 3) {
        case 0: text.erase(pos, rng() % 12); break;
        case 1: text.insert(pos, pieces[rng() % std::size(pieces)]); break;
        default: text[pos] = static_cast<char>(rng() % 256); break;
      }
    }
  } else {
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int k = 0; k < n; ++k) text += pieces[rng() % std::size(pieces)];
  }
  return text;
}

}  // namespace specjudge::fixture
