// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace specjudge {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct GenerationParams {
  std::string model_name;
  double temperature = 0.2;
  double top_p = 0.9;
  int max_new_tokens = 2048;
  /// Assistant prefill sent ahead of generation (reasoning-mode bypass).
  std::optional<std::string> prefix_injection;

  bool operator==(const GenerationParams&) const = default;

  /// Throws Error(kInvalidArgument) on out-of-range values.
  void validate() const;
};

nlohmann::json to_json(const ChatMessage& m);
nlohmann::json to_json(const GenerationParams& p);
ChatMessage message_from_json(const nlohmann::json& j);
GenerationParams params_from_json(const nlohmann::json& j);

/// One completion call. `attempt` distinguishes format retries of an identical
/// prompt; `stage` is bookkeeping (cache sub-directory) and is not hashed.
struct ChatRequest {
  std::vector<ChatMessage> messages;
  GenerationParams params;
  int attempt = 0;
  std::string stage;
};

/// Canonical serialization of (messages, params[, attempt]) with sorted keys
/// and LF line endings.
std::string canonical_request(const std::vector<ChatMessage>& messages,
                              const GenerationParams& params, int attempt = 0);

/// Hex SHA-256 of canonical_request. Attempt 0 hashes exactly like a request
/// without an attempt index.
std::string hash_request(const std::vector<ChatMessage>& messages, const GenerationParams& params,
                         int attempt = 0);

inline std::string hash_request(const ChatRequest& r) {
  return hash_request(r.messages, r.params, r.attempt);
}

struct ChatExchange {
  std::string request_digest;
  std::vector<ChatMessage> messages;
  GenerationParams params;
  int attempt = 0;
  std::string response_text;
  std::optional<long long> latency_ms;
  std::optional<std::string> timestamp;

  nlohmann::json to_json() const;
  static ChatExchange from_json(const nlohmann::json& j);
};

ChatExchange make_exchange(const ChatRequest& request, std::string response_text);

/// Append-only map from request digest to exchange. Safe for concurrent use:
/// lookups take a shared lock, appends are serialized. When bound to a file,
/// every new exchange is appended to it as one JSON line.
class Transcript {
 public:
  Transcript() = default;

  /// Loads an existing file (if any) and appends new exchanges to it.
  static std::shared_ptr<Transcript> open(const std::filesystem::path& path,
                                          bool deterministic = true);
  static std::shared_ptr<Transcript> load(const std::filesystem::path& path);

  std::optional<ChatExchange> find(const std::string& digest) const;

  /// Records an exchange. Re-recording the same response is a no-op; a
  /// different response for a known digest throws Error(kDigestConflict).
  void record(const ChatExchange& exchange);

  std::size_t size() const;
  /// Exchanges ordered by digest.
  std::vector<ChatExchange> exchanges() const;
  std::string to_jsonl() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, ChatExchange> by_digest_;
  std::optional<std::filesystem::path> file_;
  bool deterministic_ = true;
};

/// The completion contract every agent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the assistant text. Throws TransportError, Error(kTimeout),
  /// ReplayMiss or Error(kEmptyResponse).
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Backend with nothing behind it: every call raises ReplayMiss. Used as the
/// upstream of a replay-only run.
class OfflineBackend : public ChatBackend {
 public:
  std::string complete(const ChatRequest& request) override;
};

struct TranscriptCheck {
  std::size_t exchanges = 0;
  /// Stored digests that differ from the digest recomputed from the request.
  std::vector<std::string> mismatched;
};

/// Recomputes every request digest of a transcript file.
TranscriptCheck verify_transcript(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

/// Scripted backend. The first rule whose every `contains` fragment occurs in
/// the concatenated message contents answers the call; the response is
/// `responses[min(attempt, size-1)]`. No matching rule raises TransportError.
class MockBackend : public ChatBackend {
 public:
  struct Rule {
    std::vector<std::string> contains;
    std::vector<std::string> responses;
  };

  MockBackend() = default;
  explicit MockBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  /// Rules file: {"rules": [{"contains": [...], "responses": [...]}]} or
  /// {"contains": ..., "response": "..."} entries.
  static std::unique_ptr<MockBackend> from_json(const nlohmann::json& j);
  static std::unique_ptr<MockBackend> load(const std::filesystem::path& path);

  void add_rule(Rule rule) { rules_.push_back(std::move(rule)); }
  std::string complete(const ChatRequest& request) override;

  /// Number of calls answered so far, per request stage.
  std::map<std::string, std::size_t> call_counts() const;
  std::size_t total_calls() const;
  /// Every request seen, in arrival order.
  std::vector<ChatRequest> calls() const;

 private:
  std::vector<Rule> rules_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> calls_;
};

/// Live chat-completions client for OpenAI-compatible endpoints.
class HttpBackend : public ChatBackend {
 public:
  struct Endpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string token_env;  // name of the variable holding the bearer token
    std::chrono::seconds timeout{120};
  };

  explicit HttpBackend(Endpoint default_endpoint) : default_(std::move(default_endpoint)) {}

  /// Routes requests for `model_name` to a dedicated endpoint.
  void add_route(const std::string& model_name, Endpoint endpoint);

  std::string complete(const ChatRequest& request) override;

  /// Request body for the chat-completions wire format.
  static nlohmann::json request_body(const ChatRequest& request);
  /// Extracts choices[0].message.content; throws TransportError otherwise.
  static std::string parse_response_body(std::string_view body);

 private:
  const Endpoint& endpoint_for(const std::string& model) const;

  Endpoint default_;
  std::map<std::string, Endpoint> routes_;
};

/// Looks requests up by digest, first in the transcript and then in an
/// optional on-disk response cache (<cache>/<stage>/<digest>.json). Misses go
/// to the upstream backend and are recorded in both; with no upstream a miss
/// raises ReplayMiss.
class ReplayBackend : public ChatBackend {
 public:
  ReplayBackend(std::shared_ptr<Transcript> transcript, ChatBackend* upstream,
                std::optional<std::filesystem::path> cache_dir = std::nullopt,
                bool deterministic = true);

  std::string complete(const ChatRequest& request) override;

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::optional<ChatExchange> lookup_cache(const ChatRequest& request,
                                           const std::string& digest) const;
  void store_cache(const ChatRequest& request, const ChatExchange& exchange) const;

  std::shared_ptr<Transcript> transcript_;
  ChatBackend* upstream_;
  std::optional<std::filesystem::path> cache_dir_;
  bool deterministic_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace specjudge
