// Copyright 2026 The Safetune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "safetune/chat_client.h"

#include <fstream>
#include <iostream>

#include "http_post.h"
#include "nlohmann/json.hpp"
#include "safetune/error.h"

namespace safetune {

using nlohmann::json;
using nlohmann::ordered_json;

std::string EncodeChatRequest(const ChatRequest& request) {
  ordered_json body;
  body["model"] = request.model;
  ordered_json messages = ordered_json::array();
  for (const auto& m : request.messages) {
    ordered_json msg;
    msg["role"] = m.role;
    msg["content"] = m.content;
    messages.push_back(std::move(msg));
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  return body.dump();
}

std::string DecodeChatResponse(std::string_view body) {
  try {
    const json j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw EndpointError(std::string("malformed chat response: ") + e.what(),
                        false);
  }
}

HttpChatTransport::HttpChatTransport(ChatEndpointConfig config)
    : config_(std::move(config)) {}

std::string HttpChatTransport::Complete(const ChatRequest& request) {
  const std::string token = internal::ReadEnv(config_.token_env);
  return DecodeChatResponse(internal::PostJson(config_.base_url, config_.path,
                                               EncodeChatRequest(request),
                                               token, config_.timeout));
}

ReplayChatTransport::ReplayChatTransport(std::vector<std::string> responses)
    : responses_(std::move(responses)) {
  if (responses_.empty()) {
    throw InvalidArgument("replay transport needs at least one response");
  }
}

ReplayChatTransport ReplayChatTransport::FromFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open replay file: " + path);
  std::vector<std::string> responses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      responses.push_back(json::parse(line).at("response").get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what(),
                       lineno);
    }
  }
  return ReplayChatTransport(std::move(responses));
}

std::string ReplayChatTransport::Complete(const ChatRequest& request) {
  return responses_[request.index % responses_.size()];
}

void StderrLog(std::string_view line) { std::cerr << line << '\n'; }

ChatClient::ChatClient(ChatEndpointConfig config,
                       std::shared_ptr<ChatTransport> transport,
                       RetryPolicy retry, Sleeper sleep, LogSink log)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      retry_(retry),
      sleep_(std::move(sleep)),
      log_(std::move(log)),
      limiter_(std::make_unique<RateLimiter>(config_.requests_per_minute, 1.0,
                                             nullptr, sleep_)) {
  if (!transport_) throw InvalidArgument("ChatClient needs a transport");
}

std::string ChatClient::Redact(std::string text) const {
  const std::string token = internal::ReadEnv(config_.token_env);
  if (token.empty()) return text;
  static constexpr std::string_view kMask = "[redacted]";
  for (auto pos = text.find(token); pos != std::string::npos;
       pos = text.find(token, pos + kMask.size())) {
    text.replace(pos, token.size(), kMask);
  }
  return text;
}

void ChatClient::Log(std::string_view line) const {
  if (log_) log_(Redact(std::string(line)));
}

ChatResult ChatClient::Complete(ChatRequest request) {
  if (request.model.empty()) request.model = config_.model;
  ChatResult result;
  int attempts = 0;
  try {
    result.text = RetryWithBackoff(
        [&] {
          limiter_->Acquire();
          ++attempts;
          return transport_->Complete(request);
        },
        retry_, sleep_, [&](int attempt, const EndpointError& e) {
          Log("request " + std::to_string(request.index) + " attempt " +
              std::to_string(attempt) + " failed, retrying: " + e.what());
        });
  } catch (const EndpointError& e) {
    const std::string msg = Redact(e.what());
    Log("request " + std::to_string(request.index) + " gave up after " +
        std::to_string(attempts) + " attempt(s): " + msg);
    throw EndpointError(msg, e.transient(), e.status());
  }
  result.attempts = attempts;
  if (result.attempts > 1) {
    Log("request " + std::to_string(request.index) + " succeeded after " +
        std::to_string(result.attempts) + " attempts");
  }
  return result;
}

}  // namespace safetune
