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

#ifndef SAFETUNE_CHAT_CLIENT_H_
#define SAFETUNE_CHAT_CLIENT_H_

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "safetune/retry.h"

namespace safetune {

struct ChatEndpointConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  // Name of the environment variable holding the bearer token. The token
  // value itself is never stored in this struct.
  std::string token_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60000};
  double requests_per_minute = 0.0;  // 0 disables rate limiting
};

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  // Position of this request in its batch. Not sent over the wire; replay
  // transports use it to pick a canned response.
  std::size_t index = 0;
};

// Request body: {"model", "messages": [{"role", "content"}], "temperature"}.
std::string EncodeChatRequest(const ChatRequest& request);

// Extracts choices[0].message.content. Throws a terminal EndpointError on
// a malformed body.
std::string DecodeChatResponse(std::string_view body);

// Sends one request and returns the generated text, or throws
// EndpointError (transient or terminal). Must be thread-safe.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string Complete(const ChatRequest& request) = 0;
};

class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(ChatEndpointConfig config);
  std::string Complete(const ChatRequest& request) override;

 private:
  ChatEndpointConfig config_;
};

// Serves canned responses: request i gets response i mod N. The fixture
// holds one JSON object per line, {"response": "..."}.
class ReplayChatTransport : public ChatTransport {
 public:
  explicit ReplayChatTransport(std::vector<std::string> responses);
  static ReplayChatTransport FromFile(const std::string& path);
  std::string Complete(const ChatRequest& request) override;

 private:
  std::vector<std::string> responses_;
};

// Wraps any callable; used for in-process mocks.
class FunctionChatTransport : public ChatTransport {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionChatTransport(Fn fn) : fn_(std::move(fn)) {}
  std::string Complete(const ChatRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

using LogSink = std::function<void(std::string_view line)>;

// Writes to stderr.
void StderrLog(std::string_view line);

struct ChatResult {
  std::string text;
  int attempts = 1;
};

// Adds retry with exponential backoff, request-rate limiting and logging
// on top of a transport. Any occurrence of the token value is masked in
// log lines and error messages.
class ChatClient {
 public:
  ChatClient(ChatEndpointConfig config, std::shared_ptr<ChatTransport> transport,
             RetryPolicy retry = {}, Sleeper sleep = RealSleep,
             LogSink log = StderrLog);

  ChatResult Complete(ChatRequest request);

  const ChatEndpointConfig& config() const { return config_; }
  const RetryPolicy& retry_policy() const { return retry_; }
  void Log(std::string_view line) const;

 private:
  std::string Redact(std::string text) const;

  ChatEndpointConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  RetryPolicy retry_;
  Sleeper sleep_;
  LogSink log_;
  std::unique_ptr<RateLimiter> limiter_;
};

}  // namespace safetune

#endif  // SAFETUNE_CHAT_CLIENT_H_
