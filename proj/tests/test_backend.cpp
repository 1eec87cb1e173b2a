// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "specjudge/backend.hpp"
#include "specjudge/digest.hpp"
#include "specjudge/error.hpp"

namespace {

using namespace specjudge;
using nlohmann::json;

ChatRequest sample_request(const std::string& user = "hello", int attempt = 0) {
  ChatRequest r;
  r.messages = {{Role::kSystem, "sys"}, {Role::kUser, user}};
  r.params.model_name = "m";
  r.attempt = attempt;
  r.stage = "judge";
  return r;
}

TEST(Digest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, CanonicalRequestIsStable) {
  const ChatRequest r = sample_request();
  EXPECT_EQ(canonical_request(r.messages, r.params),
            R"({"messages":[{"content":"sys","role":"system"},{"content":"hello","role":"user"}],)"
            R"("params":{"max_new_tokens":2048,"model_name":"m","temperature":0.2,"top_p":0.9}})");
  EXPECT_EQ(hash_request(r), sha256_hex(canonical_request(r.messages, r.params)));
}

TEST(Digest, LineEndingsDoNotMatterButContentDoes) {
  ChatRequest crlf = sample_request("a\r\nb");
  ChatRequest lf = sample_request("a\nb");
  EXPECT_EQ(hash_request(crlf), hash_request(lf));
  EXPECT_NE(hash_request(sample_request("a")), hash_request(sample_request("b")));
  ChatRequest hot = sample_request();
  hot.params.temperature = 0.7;
  EXPECT_NE(hash_request(hot), hash_request(sample_request()));
  // Stage is bookkeeping only.
  ChatRequest other_stage = sample_request();
  other_stage.stage = "slicer";
  EXPECT_EQ(hash_request(other_stage), hash_request(sample_request()));
}

TEST(Digest, AttemptZeroHashesLikeNoAttempt) {
  const ChatRequest r = sample_request();
  EXPECT_EQ(hash_request(r.messages, r.params, 0), hash_request(r.messages, r.params));
  EXPECT_NE(hash_request(r.messages, r.params, 1), hash_request(r.messages, r.params));
  EXPECT_NE(hash_request(r.messages, r.params, 1), hash_request(r.messages, r.params, 2));
}

TEST(Params, Validation) {
  GenerationParams p;
  EXPECT_THROW(p.validate(), Error);
  p.model_name = "m";
  EXPECT_NO_THROW(p.validate());
  p.top_p = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p.top_p = 1.0;
  p.max_new_tokens = 0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Transcript, RecordFindAndConflict) {
  Transcript t;
  const ChatRequest r = sample_request();
  t.record(make_exchange(r, "one"));
  t.record(make_exchange(r, "one"));
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.find(hash_request(r))->response_text, "one");
  try {
    t.record(make_exchange(r, "two"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDigestConflict);
  }
}

TEST(Transcript, FileRoundTripAndTornLine) {
  const auto dir = fixture::temp_dir("transcript");
  const auto path = dir / "t.jsonl";
  {
    auto t = Transcript::open(path);
    t->record(make_exchange(sample_request("a"), "ra"));
    t->record(make_exchange(sample_request("b"), "rb"));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"request_digest": "abc", "messa)";
  }
  auto loaded = Transcript::load(path);
  EXPECT_EQ(loaded->size(), 2u);
  EXPECT_EQ(loaded->find(hash_request(sample_request("b")))->response_text, "rb");

  // A malformed line that is not the last one is an error.
  {
    std::ofstream out(path, std::ios::app);
    out << "\n" << make_exchange(sample_request("c"), "rc").to_json().dump() << "\n";
  }
  EXPECT_THROW(Transcript::load(path), ParseError);
}

TEST(Transcript, VerifyDetectsTamperedDigest) {
  const auto dir = fixture::temp_dir("verify");
  const auto path = dir / "t.jsonl";
  ChatExchange good = make_exchange(sample_request("a"), "ra");
  ChatExchange bad = make_exchange(sample_request("b"), "rb");
  bad.messages[1].content = "edited";
  {
    std::ofstream out(path);
    out << good.to_json().dump() << "\n" << bad.to_json().dump() << "\n";
  }
  const TranscriptCheck check = verify_transcript(path);
  EXPECT_EQ(check.exchanges, 2u);
  EXPECT_EQ(check.mismatched, std::vector<std::string>{bad.request_digest});
}

TEST(Mock, FirstMatchingRuleAndAttemptIndexedResponses) {
  MockBackend mock({{{"hello"}, {"first", "second"}}, {{"sys"}, {"fallback"}}});
  EXPECT_EQ(mock.complete(sample_request("hello", 0)), "first");
  EXPECT_EQ(mock.complete(sample_request("hello", 1)), "second");
  EXPECT_EQ(mock.complete(sample_request("hello", 5)), "second");
  EXPECT_EQ(mock.complete(sample_request("other")), "fallback");
  EXPECT_EQ(mock.total_calls(), 4u);
  EXPECT_EQ(mock.call_counts().at("judge"), 4u);
  MockBackend empty;
  EXPECT_THROW(empty.complete(sample_request()), TransportError);
}

TEST(Mock, LoadsBothRuleShapes) {
  auto mock = MockBackend::from_json(
      json::array({{{"contains", "x"}, {"response", "rx"}},
                   {{"contains", json::array({"sys", "y"})}, {"responses", {"ry"}}}}));
  EXPECT_EQ(mock->complete(sample_request("x")), "rx");
  EXPECT_EQ(mock->complete(sample_request("y")), "ry");
  EXPECT_THROW(MockBackend::from_json(json::array({{{"contains", "x"}}})), Error);
}

TEST(Replay, TranscriptThenCacheThenUpstream) {
  const auto dir = fixture::temp_dir("replay");
  MockBackend upstream({{{"sys"}, {"live"}}});
  {
    ReplayBackend replay(std::make_shared<Transcript>(), &upstream, dir);
    EXPECT_EQ(replay.complete(sample_request()), "live");
    EXPECT_EQ(replay.complete(sample_request()), "live");
    EXPECT_EQ(replay.misses(), 1u);
    EXPECT_EQ(replay.hits(), 1u);
  }
  const auto cached = dir / "judge" / (hash_request(sample_request()) + ".json");
  EXPECT_TRUE(std::filesystem::exists(cached));

  // A fresh transcript is filled from the disk cache without calling upstream.
  auto transcript = std::make_shared<Transcript>();
  ReplayBackend from_cache(transcript, &upstream, dir);
  EXPECT_EQ(from_cache.complete(sample_request()), "live");
  EXPECT_EQ(upstream.total_calls(), 1u);
  EXPECT_EQ(transcript->size(), 1u);

  // Offline and no upstream both raise ReplayMiss for unknown requests.
  OfflineBackend offline;
  ReplayBackend strict(transcript, &offline);
  EXPECT_EQ(strict.complete(sample_request()), "live");
  EXPECT_THROW(strict.complete(sample_request("new")), ReplayMiss);
  ReplayBackend no_upstream(transcript, nullptr);
  try {
    no_upstream.complete(sample_request("new"));
    FAIL();
  } catch (const ReplayMiss& e) {
    EXPECT_EQ(e.digest(), hash_request(sample_request("new")));
  }
}

TEST(Replay, DeterministicTranscriptOmitsTimings) {
  const auto dir = fixture::temp_dir("replay-timing");
  MockBackend upstream({{{"sys"}, {"r"}}});
  for (bool deterministic : {true, false}) {
    const auto path = dir / (deterministic ? "det.jsonl" : "live.jsonl");
    auto t = Transcript::open(path, deterministic);
    ReplayBackend replay(t, &upstream, std::nullopt, deterministic);
    replay.complete(sample_request());
    const std::string text = fixture::slurp(path);
    EXPECT_EQ(text.find("timestamp") != std::string::npos, !deterministic);
  }
}

TEST(Http, RequestBodyAndResponseParsing) {
  ChatRequest r = sample_request();
  r.params.prefix_injection = "<think></think>";
  const json body = HttpBackend::request_body(r);
  EXPECT_EQ(body.at("model"), "m");
  EXPECT_EQ(body.at("max_tokens"), 2048);
  EXPECT_EQ(body.at("messages").size(), 3u);
  EXPECT_EQ(body.at("messages")[2].at("role"), "assistant");

  EXPECT_EQ(HttpBackend::parse_response_body(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
  EXPECT_THROW(HttpBackend::parse_response_body("not json"), TransportError);
  EXPECT_THROW(HttpBackend::parse_response_body(R"({"choices":[]})"), TransportError);
  try {
    HttpBackend::parse_response_body(R"({"choices":[{"message":{"content":null}}]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyResponse);
  }
}

class LoopbackServer {
 public:
  LoopbackServer() {
    server_.Post("/api/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      const json body = json::parse(req.body);
      const std::string user = body.at("messages")[1].at("content");
      if (user == "fail") {
        res.status = 503;
        res.set_content("overloaded", "text/plain");
        return;
      }
      if (user == "slow") std::this_thread::sleep_for(std::chrono::milliseconds(2500));
      res.set_content(json{{"choices", {{{"message", {{"content", "echo:" + user}}}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LoopbackServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/api"; }
  const std::string& last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::string last_auth_;
};

TEST(Http, TalksToLoopbackServer) {
  LoopbackServer server;
  ::setenv("SPECJUDGE_TEST_TOKEN", "sekrit", 1);
  HttpBackend backend({server.base_url(), "SPECJUDGE_TEST_TOKEN", std::chrono::seconds(1)});
  EXPECT_EQ(backend.complete(sample_request("ping")), "echo:ping");
  EXPECT_EQ(server.last_auth(), "Bearer sekrit");

  try {
    backend.complete(sample_request("fail"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 503);
  }
  try {
    backend.complete(sample_request("slow"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
}

TEST(Http, RoutesByModelAndReportsRefusedConnection) {
  LoopbackServer server;
  HttpBackend backend({"http://127.0.0.1:1", "", std::chrono::seconds(1)});
  backend.add_route("m", {server.base_url(), "", std::chrono::seconds(1)});
  EXPECT_EQ(backend.complete(sample_request("x")), "echo:x");
  ChatRequest other = sample_request("x");
  other.params.model_name = "elsewhere";
  try {
    backend.complete(other);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 0);
  }
}

}  // namespace
