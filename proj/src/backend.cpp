// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/backend.hpp"

#include <algorithm>

#include <chrono>
#include <cstdlib>
#include <ctime>

#include <spdlog/spdlog.h>

#include "specjudge/digest.hpp"
#include "specjudge/error.hpp"
#include "util.hpp"

namespace specjudge {

using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::kSystem;
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw Error(ErrorCode::kInvalidArgument, "unknown chat role '" + std::string(s) + "'");
}

void GenerationParams::validate() const {
  if (model_name.empty()) throw Error(ErrorCode::kInvalidArgument, "model_name is empty");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must lie in (0, 1]");
  }
  if (max_new_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "max_new_tokens must be > 0");
}

json to_json(const ChatMessage& m) {
  return {{"role", to_string(m.role)}, {"content", m.content}};
}

json to_json(const GenerationParams& p) {
  json j = {{"model_name", p.model_name},
            {"temperature", p.temperature},
            {"top_p", p.top_p},
            {"max_new_tokens", p.max_new_tokens}};
  if (p.prefix_injection) j["prefix_injection"] = *p.prefix_injection;
  return j;
}

ChatMessage message_from_json(const json& j) {
  return {role_from_string(j.at("role").get<std::string>()), j.at("content").get<std::string>()};
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.model_name = j.value("model_name", std::string());
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.max_new_tokens = j.value("max_new_tokens", p.max_new_tokens);
  if (auto it = j.find("prefix_injection"); it != j.end() && it->is_string()) {
    p.prefix_injection = it->get<std::string>();
  }
  return p;
}

std::string canonical_request(const std::vector<ChatMessage>& messages,
                              const GenerationParams& params, int attempt) {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", normalize_newlines(m.content)}});
  }
  GenerationParams normalized = params;
  if (normalized.prefix_injection) {
    normalized.prefix_injection = normalize_newlines(*normalized.prefix_injection);
  }
  json j = {{"messages", std::move(msgs)}, {"params", to_json(normalized)}};
  if (attempt > 0) j["attempt"] = attempt;
  return dump_compact(j);
}

std::string hash_request(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                         int attempt) {
  return sha256_hex(canonical_request(messages, params, attempt));
}

// ---------------------------------------------------------------------------
// Exchanges and transcripts

json ChatExchange::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back(specjudge::to_json(m));
  json j = {{"request_digest", request_digest},
            {"messages", std::move(msgs)},
            {"params", specjudge::to_json(params)},
            {"attempt", attempt},
            {"response_text", response_text}};
  if (latency_ms) j["latency_ms"] = *latency_ms;
  if (timestamp) j["timestamp"] = *timestamp;
  return j;
}

ChatExchange ChatExchange::from_json(const json& j) {
  ChatExchange e;
  e.request_digest = j.at("request_digest").get<std::string>();
  for (const auto& m : j.at("messages")) e.messages.push_back(message_from_json(m));
  e.params = params_from_json(j.at("params"));
  e.attempt = j.value("attempt", 0);
  e.response_text = j.at("response_text").get<std::string>();
  if (auto it = j.find("latency_ms"); it != j.end() && it->is_number_integer()) {
    e.latency_ms = it->get<long long>();
  }
  if (auto it = j.find("timestamp"); it != j.end() && it->is_string()) {
    e.timestamp = it->get<std::string>();
  }
  return e;
}

ChatExchange make_exchange(const ChatRequest& request, std::string response_text) {
  ChatExchange e;
  e.request_digest = hash_request(request);
  e.messages = request.messages;
  e.params = request.params;
  e.attempt = request.attempt;
  e.response_text = std::move(response_text);
  return e;
}

namespace {

void load_transcript_lines(Transcript& t, const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    try {
      t.record(ChatExchange::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      // A torn final line is what an interrupted writer leaves behind.
      if (i + 1 == lines.size()) {
        spdlog::warn("{}: ignoring truncated final line", path.string());
        continue;
      }
      throw ParseError(i + 1, path.string() + ": " + e.what());
    }
  }
}

}  // namespace

std::shared_ptr<Transcript> Transcript::load(const std::filesystem::path& path) {
  auto t = std::make_shared<Transcript>();
  load_transcript_lines(*t, path);
  return t;
}

std::shared_ptr<Transcript> Transcript::open(const std::filesystem::path& path,
                                             bool deterministic) {
  auto t = std::make_shared<Transcript>();
  if (std::filesystem::exists(path)) load_transcript_lines(*t, path);
  t->file_ = path;
  t->deterministic_ = deterministic;
  return t;
}

std::optional<ChatExchange> Transcript::find(const std::string& digest) const {
  std::shared_lock lock(mutex_);
  auto it = by_digest_.find(digest);
  if (it == by_digest_.end()) return std::nullopt;
  return it->second;
}

void Transcript::record(const ChatExchange& exchange) {
  std::unique_lock lock(mutex_);
  auto it = by_digest_.find(exchange.request_digest);
  if (it != by_digest_.end()) {
    if (it->second.response_text != exchange.response_text) {
      throw Error(ErrorCode::kDigestConflict,
                  "conflicting response for digest " + exchange.request_digest);
    }
    return;
  }
  by_digest_.emplace(exchange.request_digest, exchange);
  if (file_) {
    ChatExchange stored = exchange;
    if (deterministic_) {
      stored.latency_ms.reset();
      stored.timestamp.reset();
    }
    append_file(*file_, dump_compact(stored.to_json()) + "\n");
  }
}

std::size_t Transcript::size() const {
  std::shared_lock lock(mutex_);
  return by_digest_.size();
}

std::vector<ChatExchange> Transcript::exchanges() const {
  std::shared_lock lock(mutex_);
  std::vector<ChatExchange> out;
  out.reserve(by_digest_.size());
  for (const auto& [digest, e] : by_digest_) out.push_back(e);
  return out;
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& e : exchanges()) out += dump_compact(e.to_json()) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Mock

std::unique_ptr<MockBackend> MockBackend::from_json(const json& j) {
  const json& rules = j.is_array() ? j : j.at("rules");
  auto mock = std::make_unique<MockBackend>();
  for (const auto& r : rules) {
    Rule rule;
    if (auto it = r.find("contains"); it != r.end()) {
      if (it->is_string()) {
        rule.contains.push_back(it->get<std::string>());
      } else {
        rule.contains = it->get<std::vector<std::string>>();
      }
    }
    if (auto it = r.find("responses"); it != r.end()) {
      rule.responses = it->get<std::vector<std::string>>();
    } else if (auto one = r.find("response"); one != r.end()) {
      rule.responses.push_back(one->get<std::string>());
    }
    if (rule.responses.empty()) throw Error(ErrorCode::kConfig, "mock rule without responses");
    mock->add_rule(std::move(rule));
  }
  return mock;
}

std::unique_ptr<MockBackend> MockBackend::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

std::string MockBackend::complete(const ChatRequest& request) {
  {
    std::lock_guard lock(mutex_);
    calls_.push_back(request);
  }
  std::string haystack;
  for (const auto& m : request.messages) {
    haystack += m.content;
    haystack += '\n';
  }
  for (const Rule& rule : rules_) {
    const bool match = std::all_of(rule.contains.begin(), rule.contains.end(),
                                   [&](const std::string& s) {
                                     return haystack.find(s) != std::string::npos;
                                   });
    if (!match) continue;
    const std::size_t idx =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(request.attempt, 0)),
                              rule.responses.size() - 1);
    const std::string& response = rule.responses[idx];
    if (response.empty()) throw Error(ErrorCode::kEmptyResponse, "mock returned an empty response");
    return response;
  }
  throw TransportError(404, "mock backend has no rule matching the request");
}

std::map<std::string, std::size_t> MockBackend::call_counts() const {
  std::lock_guard lock(mutex_);
  std::map<std::string, std::size_t> counts;
  for (const auto& c : calls_) ++counts[c.stage];
  return counts;
}

std::size_t MockBackend::total_calls() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

std::vector<ChatRequest> MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

// ---------------------------------------------------------------------------
// Replay / cache

ReplayBackend::ReplayBackend(std::shared_ptr<Transcript> transcript, ChatBackend* upstream,
                             std::optional<std::filesystem::path> cache_dir, bool deterministic)
    : transcript_(transcript ? std::move(transcript) : std::make_shared<Transcript>()),
      upstream_(upstream),
      cache_dir_(std::move(cache_dir)),
      deterministic_(deterministic) {}

namespace {

std::filesystem::path cache_path(const std::filesystem::path& root, const ChatRequest& request,
                                 const std::string& digest) {
  return root / (request.stage.empty() ? std::string("misc") : request.stage) / (digest + ".json");
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<ChatExchange> ReplayBackend::lookup_cache(const ChatRequest& request,
                                                        const std::string& digest) const {
  if (!cache_dir_) return std::nullopt;
  const auto path = cache_path(*cache_dir_, request, digest);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    return ChatExchange::from_json(json::parse(read_file(path)));
  } catch (const json::exception&) {
    spdlog::warn("ignoring unreadable cache entry {}", path.string());
    return std::nullopt;
  }
}

void ReplayBackend::store_cache(const ChatRequest& request, const ChatExchange& exchange) const {
  if (!cache_dir_) return;
  write_file(cache_path(*cache_dir_, request, exchange.request_digest),
             exchange.to_json().dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

std::string ReplayBackend::complete(const ChatRequest& request) {
  const std::string digest = hash_request(request);
  if (auto hit = transcript_->find(digest)) {
    ++hits_;
    return hit->response_text;
  }
  if (auto cached = lookup_cache(request, digest)) {
    ++hits_;
    transcript_->record(*cached);
    return cached->response_text;
  }
  if (upstream_ == nullptr) throw ReplayMiss(digest);
  ++misses_;

  const auto start = std::chrono::steady_clock::now();
  std::string response = upstream_->complete(request);
  if (response.empty()) throw Error(ErrorCode::kEmptyResponse, "backend returned no text");
  ChatExchange exchange = make_exchange(request, response);
  if (!deterministic_) {
    exchange.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    exchange.timestamp = utc_timestamp();
  }
  transcript_->record(exchange);
  store_cache(request, exchange);
  return response;
}

std::string OfflineBackend::complete(const ChatRequest& request) {
  throw ReplayMiss(hash_request(request));
}

TranscriptCheck verify_transcript(const std::filesystem::path& path) {
  TranscriptCheck check;
  const auto transcript = Transcript::load(path);
  for (const auto& e : transcript->exchanges()) {
    ++check.exchanges;
    if (hash_request(e.messages, e.params, e.attempt) != e.request_digest) {
      check.mismatched.push_back(e.request_digest);
    }
  }
  return check;
}

}  // namespace specjudge
