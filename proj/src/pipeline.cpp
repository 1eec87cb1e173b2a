// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "specjudge/digest.hpp"
#include "specjudge/error.hpp"
#include "util.hpp"

namespace specjudge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

volatile std::sig_atomic_t g_interrupt = 0;

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::now()));
}

json encode(const SlicerOutput& s) {
  return {{"thinking", s.thinking},
          {"sliced_bad", s.sliced_bad},
          {"sliced_good", s.sliced_good},
          {"warnings", s.warnings}};
}

SlicerOutput slicer_from_json(const json& j) {
  SlicerOutput s;
  s.thinking = j.value("thinking", "");
  s.sliced_bad = j.at("sliced_bad").get<std::string>();
  s.sliced_good = j.at("sliced_good").get<std::string>();
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

json encode(const JudgeOutput& o) {
  return {{"thinking", o.thinking},
          {"verdict", std::string(to_string(o.verdict))},
          {"warnings", o.warnings}};
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "good") return Verdict::kGood;
  if (s == "bad") return Verdict::kBad;
  throw Error(ErrorCode::kSchema, "verdict must be good or bad, got '" + s + "'");
}

JudgeOutput judge_from_json(const json& j) {
  JudgeOutput o;
  o.thinking = j.value("thinking", "");
  o.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  o.warnings = j.value("warnings", std::vector<std::string>{});
  return o;
}

json encode(const AgentFailure& f) {
  return {{"role", std::string(to_string(f.role))},
          {"item_id", f.item_id},
          {"attempts", f.attempts},
          {"error_kind", std::string(to_string(f.error_code))},
          {"error_message", f.error_message},
          {"raw_last_output", f.raw_last_output}};
}

AgentFailure failure_from_json(const json& j) {
  AgentFailure f;
  f.role = agent_role_from_string(j.at("role").get<std::string>());
  f.item_id = j.value("item_id", "");
  f.attempts = j.value("attempts", 1);
  f.error_code = error_code_from_string(j.at("error_kind").get<std::string>());
  f.error_message = j.value("error_message", "");
  f.raw_last_output = j.value("raw_last_output", "");
  return f;
}

json encode(const Reduction& r) { return {{"percent", r.percent}, {"clamped", r.clamped}}; }

Reduction reduction_from_json(const json& j) {
  return Reduction{j.at("percent").get<double>(), j.value("clamped", false)};
}

template <typename T, typename Fn>
json opt_json(const std::optional<T>& v, Fn&& fn) {
  return v ? fn(*v) : json(nullptr);
}

json agent_snapshot(const AgentConfig& a) {
  return {{"role", std::string(to_string(a.role))},
          {"model_profile", a.model_profile},
          {"params", to_json(a.params)},
          {"max_format_retries", a.max_format_retries},
          {"with_contract", a.with_contract},
          {"template_digest", a.prompt.digest()}};
}

std::string failure_summary(const AgentFailure& f) {
  return fmt::format("{}: {} after {} attempt(s): {}", to_string(f.role),
                     to_string(f.error_code), f.attempts, f.error_message);
}

void note_thinking(const std::string& stage, const std::string& thinking,
                   std::vector<std::string>& warnings) {
  if (auto finding = check_thinking_cap(thinking)) warnings.push_back(stage + ": " + finding->message);
}

std::string safe_name(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

constexpr std::string_view kVulnerableSuffix = "/vulnerable";
constexpr std::string_view kPatchedSuffix = "/patched";

}  // namespace

void request_interrupt() noexcept { g_interrupt = 1; }
void clear_interrupt() noexcept { g_interrupt = 0; }

// ---------------------------------------------------------------------------

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::kRaw: return "RAW";
    case Tier::kBlind: return "BLIND";
    case Tier::kFeature: return "FEATURE";
  }
  return "?";
}

std::string_view to_string(PairStatus status) {
  return status == PairStatus::kComplete ? "complete" : "invalidated";
}

Tier tier_from_string(std::string_view s) {
  const std::string lower = to_lower(s);
  if (lower == "raw") return Tier::kRaw;
  if (lower == "blind") return Tier::kBlind;
  if (lower == "feature") return Tier::kFeature;
  throw Error(ErrorCode::kInvalidArgument, "unknown tier '" + std::string(s) + "'");
}

void RunConfig::validate() const {
  const bool wants_slicer = tier != Tier::kRaw;
  const bool wants_engineer = tier == Tier::kFeature;
  if (slicer.has_value() != wants_slicer) {
    throw Error(ErrorCode::kConfig, fmt::format("tier {} {} a slicer", to_string(tier),
                                                wants_slicer ? "requires" : "must not have"));
  }
  if (engineer.has_value() != wants_engineer) {
    throw Error(ErrorCode::kConfig, fmt::format("tier {} {} a reverse engineer", to_string(tier),
                                                wants_engineer ? "requires" : "must not have"));
  }
  if (judge.role != AgentRole::kJudge) throw Error(ErrorCode::kConfig, "judge config has wrong role");
  if (judge.with_contract != wants_engineer) {
    throw Error(ErrorCode::kConfig, fmt::format("tier {} judge must {}use a contract",
                                                to_string(tier), wants_engineer ? "" : "not "));
  }
  if (slicer && slicer->role != AgentRole::kSlicer) {
    throw Error(ErrorCode::kConfig, "slicer config has wrong role");
  }
  if (engineer && engineer->role != AgentRole::kReverseEngineer) {
    throw Error(ErrorCode::kConfig, "reverse engineer config has wrong role");
  }
  if (worker_count == 0) throw Error(ErrorCode::kConfig, "worker_count must be positive");
  if (run_id.empty() || run_id.find_first_of("/\\") != std::string::npos || run_id == "." ||
      run_id == "..") {
    throw Error(ErrorCode::kConfig, "run_id must be a plain non-empty name");
  }
  if (slicer) slicer->validate();
  if (engineer) engineer->validate();
  judge.validate();
}

json RunConfig::snapshot() const {
  json agents = json::object();
  if (slicer) agents["slicer"] = agent_snapshot(*slicer);
  if (engineer) agents["reverse_engineer"] = agent_snapshot(*engineer);
  agents["judge"] = agent_snapshot(judge);
  return {{"tier", std::string(to_string(tier))},
          {"run_id", run_id},
          {"drop_partial_pairs", drop_partial_pairs},
          {"agents", std::move(agents)}};
}

// ---------------------------------------------------------------------------

json PairArtifact::to_json() const {
  json failures_json = json::array();
  for (const auto& f : failures) failures_json.push_back(encode(f));
  return {
      {"pair_id", pair_id},
      {"status", std::string(to_string(status))},
      {"slicer", opt_json(slicer, [](const auto& v) { return encode(v); })},
      {"reduction_vulnerable",
       opt_json(reduction_vulnerable, [](const auto& v) { return encode(v); })},
      {"reduction_patched",
       opt_json(reduction_patched, [](const auto& v) { return encode(v); })},
      {"feature", opt_json(feature, [](const auto& v) { return json(gherkin::render_feature(v)); })},
      {"verdict_vulnerable",
       opt_json(verdict_vulnerable, [](const auto& v) { return encode(v); })},
      {"verdict_patched",
       opt_json(verdict_patched, [](const auto& v) { return encode(v); })},
      {"failures", std::move(failures_json)},
      {"attempts", attempts},
      {"warnings", warnings},
  };
}

PairArtifact PairArtifact::from_json(const json& j) {
  try {
    PairArtifact a;
    a.pair_id = j.at("pair_id").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status == "complete") {
      a.status = PairStatus::kComplete;
    } else if (status == "invalidated") {
      a.status = PairStatus::kInvalidated;
    } else {
      throw Error(ErrorCode::kSchema, "unknown pair status '" + status + "'");
    }
    auto present = [&](const char* key) { return j.contains(key) && !j.at(key).is_null(); };
    if (present("slicer")) a.slicer = slicer_from_json(j.at("slicer"));
    if (present("reduction_vulnerable")) {
      a.reduction_vulnerable = reduction_from_json(j.at("reduction_vulnerable"));
    }
    if (present("reduction_patched")) a.reduction_patched = reduction_from_json(j.at("reduction_patched"));
    if (present("feature")) a.feature = gherkin::parse_feature(j.at("feature").get<std::string>());
    if (present("verdict_vulnerable")) a.verdict_vulnerable = judge_from_json(j.at("verdict_vulnerable"));
    if (present("verdict_patched")) a.verdict_patched = judge_from_json(j.at("verdict_patched"));
    for (const auto& f : j.value("failures", json::array())) a.failures.push_back(failure_from_json(f));
    a.attempts = j.value("attempts", std::map<std::string, int>{});
    a.warnings = j.value("warnings", std::vector<std::string>{});
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed pair artifact: ") + e.what());
  }
}

json SampleRecord::to_json() const {
  return {{"sample_id", sample_id},
          {"pair_id", pair_id},
          {"project", project},
          {"tier", std::string(to_string(tier))},
          {"label", std::string(to_string(label))},
          {"verdict", verdict ? json(std::string(to_string(*verdict))) : json(nullptr)},
          {"pair_status", std::string(to_string(pair_status))},
          {"cwe_ids", cwe_ids},
          {"judged_code", judged_code},
          {"gherkin", gherkin ? json(*gherkin) : json(nullptr)},
          {"thinking", thinking},
          {"attempts", attempts},
          {"failure", failure ? json(*failure) : json(nullptr)}};
}

SampleRecord SampleRecord::from_json(const json& j) {
  try {
    SampleRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.pair_id = j.value("pair_id", "");
    r.project = j.value("project", "");
    r.tier = tier_from_string(j.at("tier").get<std::string>());
    const auto label = j.at("label").get<std::string>();
    if (label == to_string(Label::kVulnerable)) {
      r.label = Label::kVulnerable;
    } else if (label == to_string(Label::kBenign)) {
      r.label = Label::kBenign;
    } else {
      throw Error(ErrorCode::kSchema, "unknown label '" + label + "'");
    }
    if (j.contains("verdict") && !j.at("verdict").is_null()) {
      r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    }
    r.pair_status = j.value("pair_status", "complete") == "complete" ? PairStatus::kComplete
                                                                      : PairStatus::kInvalidated;
    r.cwe_ids = j.value("cwe_ids", std::vector<std::string>{});
    r.judged_code = j.value("judged_code", "");
    if (j.contains("gherkin") && !j.at("gherkin").is_null()) r.gherkin = j.at("gherkin").get<std::string>();
    r.thinking = j.value("thinking", "");
    r.attempts = j.value("attempts", 0);
    if (j.contains("failure") && !j.at("failure").is_null()) r.failure = j.at("failure").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("malformed sample record: ") + e.what());
  }
}

std::string samples_to_jsonl(const std::vector<SampleRecord>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += dump_compact(s.to_json());
    out += '\n';
  }
  return out;
}

std::vector<SampleRecord> samples_from_jsonl(std::string_view text) {
  std::vector<SampleRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(SampleRecord::from_json(j));
  }
  return out;
}

std::vector<SampleRecord> load_samples(const fs::path& run_dir_or_file) {
  fs::path file = run_dir_or_file;
  if (fs::is_directory(file)) file /= "samples.jsonl";
  return samples_from_jsonl(read_file(file));
}

// ---------------------------------------------------------------------------

PairArtifact run_pair(const CommitPair& pair, const RunConfig& cfg, ChatBackend& backend) {
  PairArtifact art;
  art.pair_id = pair.pair_id;

  const CodeSample& bad = pair.vulnerable;
  std::string code_vulnerable = bad.function_source;
  std::string code_patched = pair.patched.function_source;
  const std::string cve_description = bad.cve_description.value_or("");
  const std::string commit_message = bad.commit_message.value_or("");

  if (cfg.tier != Tier::kRaw) {
    auto run = run_slicer(*cfg.slicer,
                          {{"bad_code", code_vulnerable},
                           {"good_code", code_patched},
                           {"cve_description", cve_description},
                           {"commit_message", commit_message}},
                          backend, pair.pair_id);
    art.attempts["slicer"] = run.attempts;
    if (!run.ok()) {
      art.failures.push_back(*run.failure);
      return art;
    }
    art.slicer = std::move(*run.output);
    note_thinking("slicer", art.slicer->thinking, art.warnings);
    auto reduce = [&](const std::string& original, const std::string& sliced,
                      std::string_view which) -> std::optional<Reduction> {
      if (original.empty()) return std::nullopt;
      Reduction r = slicing_reduction(original, sliced);
      if (r.clamped) art.warnings.push_back(fmt::format("slicer: {} slice longer than original", which));
      return r;
    };
    art.reduction_vulnerable = reduce(code_vulnerable, art.slicer->sliced_bad, "vulnerable");
    art.reduction_patched = reduce(code_patched, art.slicer->sliced_good, "patched");
    code_vulnerable = art.slicer->sliced_bad;
    code_patched = art.slicer->sliced_good;
  }

  std::optional<std::string> contract;
  if (cfg.tier == Tier::kFeature) {
    auto run = run_engineer(*cfg.engineer,
                            {{"sliced_bad", code_vulnerable},
                             {"sliced_good", code_patched},
                             {"cve_description", cve_description},
                             {"commit_message", commit_message}},
                            backend, pair.pair_id);
    art.attempts["reverse_engineer"] = run.attempts;
    if (!run.ok()) {
      art.failures.push_back(*run.failure);
      return art;
    }
    note_thinking("reverse_engineer", run.output->thinking, art.warnings);
    for (const auto& w : run.output->warnings) art.warnings.push_back("reverse_engineer: " + w);
    for (const auto& f : gherkin::lint_feature(run.output->feature)) {
      art.warnings.push_back(fmt::format("lint {} {}: {}", to_string(f.severity), f.rule_id, f.message));
    }
    art.feature = std::move(run.output->feature);
    contract = gherkin::render_feature(*art.feature);
  }

  auto judge_one = [&](const std::string& code, std::string_view suffix,
                       std::optional<JudgeOutput>& slot, const char* stage) {
    AgentInputs inputs{{"target_code", code}};
    if (contract) inputs["gherkin"] = *contract;
    auto run = run_judge(cfg.judge, inputs, backend, pair.pair_id + std::string(suffix));
    art.attempts[stage] = run.attempts;
    if (!run.ok()) {
      art.failures.push_back(*run.failure);
      return;
    }
    note_thinking(stage, run.output->thinking, art.warnings);
    slot = std::move(*run.output);
  };
  judge_one(code_vulnerable, kVulnerableSuffix, art.verdict_vulnerable, "judge_vulnerable");
  judge_one(code_patched, kPatchedSuffix, art.verdict_patched, "judge_patched");

  art.status = art.verdict_vulnerable && art.verdict_patched ? PairStatus::kComplete
                                                             : PairStatus::kInvalidated;
  return art;
}

namespace {

std::vector<SampleRecord> sample_records(const CommitPair& pair, const PairArtifact& art,
                                         Tier tier, bool drop_partial) {
  std::optional<std::string> contract;
  if (art.feature) contract = gherkin::render_feature(*art.feature);
  const bool upstream_failed =
      !art.failures.empty() && art.failures.front().role != AgentRole::kJudge;

  auto make = [&](const CodeSample& s, const std::optional<JudgeOutput>& verdict,
                  std::string_view suffix, const char* stage, const std::string& code) {
    SampleRecord r;
    r.sample_id = s.sample_id;
    r.pair_id = pair.pair_id;
    r.project = s.project;
    r.tier = tier;
    r.label = s.label;
    r.pair_status = art.status;
    r.cwe_ids = s.cwe_ids;
    r.judged_code = upstream_failed ? std::string() : code;
    r.gherkin = contract;
    if (verdict && !(drop_partial && art.status != PairStatus::kComplete)) {
      r.verdict = verdict->verdict;
    }
    if (verdict) r.thinking = verdict->thinking;
    if (auto it = art.attempts.find(stage); it != art.attempts.end()) r.attempts = it->second;
    const std::string item = pair.pair_id + std::string(suffix);
    for (const auto& f : art.failures) {
      if (f.role != AgentRole::kJudge || f.item_id == item) {
        r.failure = failure_summary(f);
        break;
      }
    }
    if (!r.failure && !r.verdict && verdict) r.failure = "dropped: counterpart judge failed";
    return r;
  };

  const std::string code_v = art.slicer ? art.slicer->sliced_bad : pair.vulnerable.function_source;
  const std::string code_p = art.slicer ? art.slicer->sliced_good : pair.patched.function_source;
  return {make(pair.vulnerable, art.verdict_vulnerable, kVulnerableSuffix, "judge_vulnerable", code_v),
          make(pair.patched, art.verdict_patched, kPatchedSuffix, "judge_patched", code_p)};
}

json without_timestamp(json manifest) {
  manifest.erase("created_at");
  return manifest;
}

std::string pair_file_name(const std::string& pair_id) {
  return sha256_hex(pair_id).substr(0, 24) + ".json";
}

}  // namespace

fs::path run_directory(const RunConfig& cfg) { return cfg.cache_dir / "runs" / cfg.run_id; }

RunResult run_corpus(const Corpus& corpus, const RunConfig& cfg, ChatBackend& backend,
                     std::shared_ptr<Transcript> shared) {
  cfg.validate();
  if (!shared) shared = std::make_shared<Transcript>();

  std::optional<fs::path> responses;
  std::optional<fs::path> run_dir;
  if (!cfg.cache_dir.empty()) {
    responses = cfg.cache_dir / "responses";
    run_dir = run_directory(cfg);
  }
  ReplayBackend cached(shared, &backend, responses, cfg.deterministic);

  RunResult result;
  result.run_id = cfg.run_id;
  result.tier = cfg.tier;
  result.config = cfg.snapshot();
  result.drop_partial_pairs = cfg.drop_partial_pairs;
  result.directory = run_dir;

  const std::size_t n = corpus.pairs.size();
  std::vector<std::optional<PairArtifact>> slots(n);

  if (run_dir) {
    json manifest = {{"run_id", cfg.run_id},
                     {"tier", std::string(to_string(cfg.tier))},
                     {"config", result.config},
                     {"corpus_digest", corpus_digest(corpus)},
                     {"pairs_total", n}};
    if (!cfg.deterministic) manifest["created_at"] = utc_now();
    const fs::path manifest_path = *run_dir / "manifest.json";
    bool stale = false;
    if (fs::exists(manifest_path)) {
      try {
        stale = without_timestamp(json::parse(read_file(manifest_path))) != without_timestamp(manifest);
      } catch (const json::exception&) {
        stale = true;
      }
    }
    if (stale) {
      spdlog::warn("run {}: configuration or corpus changed, discarding saved pairs", cfg.run_id);
      fs::remove_all(*run_dir / "pairs");
    }
    fs::create_directories(*run_dir / "pairs");
    write_file(manifest_path, manifest.dump(2) + "\n");

    std::size_t resumed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const fs::path file = *run_dir / "pairs" / pair_file_name(corpus.pairs[i].pair_id);
      if (!fs::exists(file)) continue;
      try {
        auto art = PairArtifact::from_json(json::parse(read_file(file)));
        if (art.pair_id == corpus.pairs[i].pair_id) {
          slots[i] = std::move(art);
          ++resumed;
        }
      } catch (const std::exception& e) {
        spdlog::warn("ignoring unreadable saved pair {}: {}", file.string(), e.what());
      }
    }
    if (resumed > 0) spdlog::info("run {}: resuming with {} of {} pairs done", cfg.run_id, resumed, n);
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    while (!stop.load()) {
      if (g_interrupt) {
        std::lock_guard lock(error_mutex);
        if (!first_error) {
          first_error = std::make_exception_ptr(Error(ErrorCode::kInterrupted, "run interrupted"));
        }
        stop = true;
        return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      if (slots[i]) continue;
      try {
        PairArtifact art = run_pair(corpus.pairs[i], cfg, cached);
        if (run_dir) {
          write_file(*run_dir / "pairs" / pair_file_name(art.pair_id), dump_compact(art.to_json()) + "\n");
        }
        slots[i] = std::move(art);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };

  {
    const unsigned count = std::max(1u, std::min<unsigned>(cfg.worker_count, static_cast<unsigned>(n)));
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  result.artifacts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PairArtifact& art = *slots[i];
    for (auto& rec : sample_records(corpus.pairs[i], art, cfg.tier, cfg.drop_partial_pairs)) {
      if (rec.verdict) ++result.tallies.samples_judged;
      result.samples.push_back(std::move(rec));
    }
    if (art.status == PairStatus::kComplete) ++result.tallies.pairs_valid;
    result.artifacts.push_back(std::move(art));
  }
  result.tallies.pairs_total = n;

  if (run_dir) {
    std::string artifacts;
    for (const auto& a : result.artifacts) artifacts += dump_compact(a.to_json()) + "\n";
    write_file(*run_dir / "artifacts.jsonl", artifacts);
    write_file(*run_dir / "samples.jsonl", samples_to_jsonl(result.samples));
    const json summary = {{"run_id", result.run_id},
                          {"tier", std::string(to_string(result.tier))},
                          {"pairs_total", result.tallies.pairs_total},
                          {"pairs_valid", result.tallies.pairs_valid},
                          {"samples_judged", result.tallies.samples_judged},
                          {"drop_partial_pairs", result.drop_partial_pairs}};
    write_file(*run_dir / "summary.json", summary.dump(2) + "\n");
  }
  spdlog::info("run {} ({}): {}/{} pairs valid, {} samples judged", result.run_id,
               to_string(result.tier), result.tallies.pairs_valid, result.tallies.pairs_total,
               result.tallies.samples_judged);
  return result;
}

RunResult load_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) {
    throw Error(ErrorCode::kFile, "not a run directory: " + run_dir.string());
  }
  RunResult r;
  r.directory = run_dir;
  try {
    const json manifest = json::parse(read_file(run_dir / "manifest.json"));
    r.run_id = manifest.at("run_id").get<std::string>();
    r.tier = tier_from_string(manifest.at("tier").get<std::string>());
    r.config = manifest.value("config", json::object());
    r.drop_partial_pairs = r.config.value("drop_partial_pairs", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, "manifest.json: " + std::string(e.what()));
  }
  std::size_t line_no = 0;
  for (const auto& line : split_lines(read_file(run_dir / "artifacts.jsonl"))) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      r.artifacts.push_back(PairArtifact::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  r.samples = load_samples(run_dir / "samples.jsonl");
  r.tallies.pairs_total = r.artifacts.size();
  for (const auto& a : r.artifacts) r.tallies.pairs_valid += a.status == PairStatus::kComplete;
  for (const auto& s : r.samples) r.tallies.samples_judged += s.verdict.has_value();
  return r;
}

// ---------------------------------------------------------------------------

HarnessConfig HarnessConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "harness config must be an object");
  HarnessConfig c;
  try {
    const json& profiles = j.at("profiles");
    if (!profiles.is_object() || profiles.empty()) {
      throw Error(ErrorCode::kConfig, "'profiles' must be a non-empty object");
    }
    for (const auto& [name, p] : profiles.items()) {
      ModelProfile m;
      m.name = name;
      m.params.model_name = p.value("model_name", name);
      m.params.temperature = p.value("temperature", m.params.temperature);
      m.params.top_p = p.value("top_p", m.params.top_p);
      m.params.max_new_tokens = p.value("max_new_tokens", m.params.max_new_tokens);
      if (p.contains("prefix_injection") && !p.at("prefix_injection").is_null()) {
        m.params.prefix_injection = p.at("prefix_injection").get<std::string>();
      }
      m.params.validate();
      m.base_url = p.value("base_url", "");
      m.token_env = p.value("token_env", "");
      m.timeout_s = p.value("timeout_s", 120);
      if (m.timeout_s <= 0) throw Error(ErrorCode::kConfig, "profile " + name + ": timeout_s must be positive");
      c.profiles.emplace(name, std::move(m));
    }
    const json& agents = j.at("agents");
    c.slicer_profile = agents.at("slicer").get<std::string>();
    c.engineer_profile = agents.at("reverse_engineer").get<std::string>();
    c.judge_profile = agents.at("judge").get<std::string>();
    for (const auto* name : {&c.slicer_profile, &c.engineer_profile, &c.judge_profile}) {
      c.profile(*name);
    }
    if (j.contains("templates_dir")) {
      fs::path dir = j.at("templates_dir").get<std::string>();
      if (dir.is_relative()) dir = base_dir / dir;
      c.templates_dir = dir;
    }
    c.max_format_retries = j.value("max_format_retries", 2);
    if (c.max_format_retries < 0) throw Error(ErrorCode::kConfig, "max_format_retries must be >= 0");
    const int workers = j.value("workers", 4);
    if (workers <= 0) throw Error(ErrorCode::kConfig, "workers must be positive");
    c.workers = static_cast<unsigned>(workers);
    c.drop_partial_pairs = j.value("drop_partial_pairs", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("harness config: ") + e.what());
  }
  return c;
}

HarnessConfig HarnessConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

const ModelProfile& HarnessConfig::profile(const std::string& name) const {
  auto it = profiles.find(name);
  if (it == profiles.end()) throw Error(ErrorCode::kConfig, "unknown model profile '" + name + "'");
  return it->second;
}

AgentConfig HarnessConfig::agent(AgentRole role, const std::string& profile_name,
                                 bool with_contract) const {
  const ModelProfile& p = profile(profile_name);
  std::string name(to_string(role));
  if (role == AgentRole::kJudge && !with_contract) name = "judge_blind";

  AgentConfig a;
  a.role = role;
  a.model_profile = p.name;
  a.params = p.params;
  a.max_format_retries = max_format_retries;
  a.with_contract = role == AgentRole::kJudge ? with_contract : true;
  a.prompt = builtin_template(name);
  if (templates_dir) {
    for (const auto& file : {*templates_dir / (name + "." + p.name + ".txt"),
                             *templates_dir / (name + ".txt")}) {
      if (fs::exists(file)) {
        a.prompt = PromptTemplate::parse(read_file(file));
        break;
      }
    }
  }
  a.validate();
  return a;
}

RunConfig HarnessConfig::run_config(Tier tier, const std::string& run_id, const fs::path& cache_dir,
                                    const std::optional<std::string>& engineer_override,
                                    const std::optional<std::string>& judge_override) const {
  RunConfig cfg;
  cfg.tier = tier;
  cfg.run_id = run_id;
  cfg.cache_dir = cache_dir;
  cfg.worker_count = workers;
  cfg.drop_partial_pairs = drop_partial_pairs;
  if (tier != Tier::kRaw) cfg.slicer = agent(AgentRole::kSlicer, slicer_profile);
  if (tier == Tier::kFeature) {
    cfg.engineer = agent(AgentRole::kReverseEngineer, engineer_override.value_or(engineer_profile));
  }
  cfg.judge = agent(AgentRole::kJudge, judge_override.value_or(judge_profile), tier == Tier::kFeature);
  return cfg;
}

TierResults run_tiers(const Corpus& corpus, const HarnessConfig& config, ChatBackend& backend,
                      const std::string& run_id, const fs::path& cache_dir, bool deterministic,
                      std::shared_ptr<Transcript> shared) {
  auto transcript = shared ? shared : std::make_shared<Transcript>();
  auto run = [&](Tier tier) {
    RunConfig cfg = config.run_config(tier, run_id + "-" + to_lower(to_string(tier)), cache_dir);
    cfg.deterministic = deterministic;
    return run_corpus(corpus, cfg, backend, transcript);
  };
  TierResults out;
  out.raw = run(Tier::kRaw);
  out.blind = run(Tier::kBlind);
  out.feature = run(Tier::kFeature);
  return out;
}

std::vector<MatrixCell> run_matrix(const Corpus& corpus,
                                   const std::vector<std::string>& engineer_profiles,
                                   const std::vector<std::string>& judge_profiles,
                                   const HarnessConfig& config, ChatBackend& backend,
                                   const std::string& run_id, const fs::path& cache_dir,
                                   bool deterministic, std::shared_ptr<Transcript> shared) {
  if (engineer_profiles.empty() || judge_profiles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "matrix needs at least one engineer and one judge profile");
  }
  for (const auto& p : engineer_profiles) config.profile(p);
  for (const auto& p : judge_profiles) config.profile(p);

  auto transcript = shared ? shared : std::make_shared<Transcript>();
  std::vector<MatrixCell> cells;
  for (const auto& a2 : engineer_profiles) {
    for (const auto& a3 : judge_profiles) {
      MatrixCell cell{a2, a3, std::nullopt, std::nullopt};
      try {
        RunConfig cfg = config.run_config(Tier::kFeature, run_id + "-" + safe_name(a2) + "-" + safe_name(a3), cache_dir,
                                          a2, a3);
        cfg.deterministic = deterministic;
        cell.result = run_corpus(corpus, cfg, backend, transcript);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInterrupted) throw;
        spdlog::error("matrix cell ({}, {}) failed: {}", a2, a3, e.what());
        cell.error = fmt::format("{}: {}", to_string(e.code()), e.what());
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace specjudge
