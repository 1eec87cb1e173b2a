// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "specjudge/backend.hpp"
#include "specjudge/error.hpp"
#include "util.hpp"

namespace specjudge {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path_prefix;
};

SplitUrl split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfig, "base_url needs a scheme: " + base_url);
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.path_prefix = base_url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

}  // namespace

void HttpBackend::add_route(const std::string& model_name, Endpoint endpoint) {
  routes_[model_name] = std::move(endpoint);
}

const HttpBackend::Endpoint& HttpBackend::endpoint_for(const std::string& model) const {
  auto it = routes_.find(model);
  return it == routes_.end() ? default_ : it->second;
}

json HttpBackend::request_body(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back(to_json(m));
  if (request.params.prefix_injection && !request.params.prefix_injection->empty()) {
    messages.push_back({{"role", "assistant"}, {"content", *request.params.prefix_injection}});
  }
  return {{"model", request.params.model_name},
          {"messages", std::move(messages)},
          {"temperature", request.params.temperature},
          {"top_p", request.params.top_p},
          {"max_tokens", request.params.max_new_tokens}};
}

std::string HttpBackend::parse_response_body(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(200, std::string("response is not JSON: ") + e.what());
  }
  const json* content = nullptr;
  if (auto choices = j.find("choices"); choices != j.end() && choices->is_array() &&
                                        !choices->empty()) {
    const json& first = (*choices)[0];
    if (auto msg = first.find("message"); msg != first.end() && msg->is_object()) {
      if (auto c = msg->find("content"); c != msg->end()) content = &*c;
    }
  }
  if (content == nullptr) throw TransportError(200, "response lacks choices[0].message.content");
  if (content->is_null()) throw Error(ErrorCode::kEmptyResponse, "model returned null content");
  if (!content->is_string()) throw TransportError(200, "message content is not a string");
  std::string text = content->get<std::string>();
  if (text.empty()) throw Error(ErrorCode::kEmptyResponse, "model returned empty content");
  return text;
}

std::string HttpBackend::complete(const ChatRequest& request) {
  request.params.validate();
  const Endpoint& endpoint = endpoint_for(request.params.model_name);
  const SplitUrl url = split_url(endpoint.base_url);

  httplib::Client client(url.origin);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  if (!endpoint.token_env.empty()) {
    if (const char* token = std::getenv(endpoint.token_env.c_str()); token && *token) {
      client.set_bearer_token_auth(token);
    }
  }

  const std::string body = dump_compact(request_body(request));
  auto result = client.Post(url.path_prefix + "/v1/chat/completions", body, "application/json");
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::kTimeout,
                  "chat completion to " + endpoint.base_url + " timed out (" +
                      httplib::to_string(err) + ")");
    }
    throw TransportError(0, "chat completion to " + endpoint.base_url +
                                " failed: " + httplib::to_string(err));
  }
  if (result->status != 200) {
    throw TransportError(result->status, "chat completion returned HTTP " +
                                             std::to_string(result->status) + ": " +
                                             result->body.substr(0, 512));
  }
  return parse_response_body(result->body);
}

}  // namespace specjudge
