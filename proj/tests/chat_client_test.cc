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

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "loopback_server.h"
#include "nlohmann/json.hpp"
#include "safetune/error.h"

namespace safetune {
namespace {

using ::testing::HasSubstr;
using ::testing::Not;
using nlohmann::json;
using std::chrono::milliseconds;
using test_support::LoopbackServer;

constexpr char kSentinel[] = "sk-SENTINEL-9f3a77c1";

std::string OpenAiBody(const std::string& content) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

struct Recorder {
  std::mutex mu;
  std::vector<std::string> lines;
  std::vector<milliseconds> waits;

  LogSink Log() {
    return [this](std::string_view l) {
      std::lock_guard<std::mutex> lock(mu);
      lines.emplace_back(l);
    };
  }
  Sleeper Sleep() {
    return [this](milliseconds d) {
      std::lock_guard<std::mutex> lock(mu);
      waits.push_back(d);
    };
  }
  std::string All() const {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
  }
};

TEST(ChatWire, EncodesInFieldOrder) {
  ChatRequest r;
  r.model = "m";
  r.messages = {{"system", "sys"}, {"user", "hi"}};
  r.temperature = 0.5;
  EXPECT_EQ(EncodeChatRequest(r),
            R"({"model":"m","messages":[{"role":"system","content":"sys"},)"
            R"({"role":"user","content":"hi"}],"temperature":0.5})");
}

TEST(ChatWire, DecodesFirstChoice) {
  EXPECT_EQ(DecodeChatResponse(OpenAiBody("hello")), "hello");
  try {
    DecodeChatResponse(R"({"choices": []})");
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_FALSE(e.transient());
  }
}

TEST(ReplayTransport, CyclesByIndex) {
  ReplayChatTransport t({"zero", "one"});
  ChatRequest r;
  r.index = 3;
  EXPECT_EQ(t.Complete(r), "one");
  r.index = 4;
  EXPECT_EQ(t.Complete(r), "zero");
  EXPECT_THROW(ReplayChatTransport({}), InvalidArgument);
}

TEST(ReplayTransport, FromFile) {
  const auto path =
      (std::filesystem::temp_directory_path() / "safetune_replay.jsonl").string();
  std::ofstream(path) << R"({"response": "a\nb"})" << "\n\n"
                      << R"({"response": "c"})" << "\n";
  auto t = ReplayChatTransport::FromFile(path);
  ChatRequest r;
  EXPECT_EQ(t.Complete(r), "a\nb");
  r.index = 1;
  EXPECT_EQ(t.Complete(r), "c");
}

TEST(ChatClient, RetriesTwiceThenSucceeds) {
  Recorder rec;
  int calls = 0;
  auto transport = std::make_shared<FunctionChatTransport>([&](const ChatRequest&) {
    if (++calls <= 2) throw EndpointError("HTTP 503", true, 503);
    return std::string("ok");
  });
  ChatClient client({}, transport, RetryPolicy{}, rec.Sleep(), rec.Log());
  const ChatResult r = client.Complete({});
  EXPECT_EQ(r.text, "ok");
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(rec.waits, (std::vector<milliseconds>{milliseconds(500), milliseconds(1000)}));
}

TEST(ChatClient, FillsDefaultModel) {
  ChatEndpointConfig cfg;
  cfg.model = "tiny";
  std::string seen;
  auto transport = std::make_shared<FunctionChatTransport>([&](const ChatRequest& r) {
    seen = r.model;
    return std::string();
  });
  ChatClient(cfg, transport, {}, [](milliseconds) {}, nullptr).Complete({});
  EXPECT_EQ(seen, "tiny");
}

TEST(ChatClient, TerminalErrorStopsImmediately) {
  Recorder rec;
  int calls = 0;
  auto transport = std::make_shared<FunctionChatTransport>(
      [&](const ChatRequest&) -> std::string {
        ++calls;
        throw EndpointError("HTTP 401", false, 401);
      });
  ChatClient client({}, transport, RetryPolicy{}, rec.Sleep(), rec.Log());
  EXPECT_THROW(client.Complete({}), EndpointError);
  EXPECT_EQ(calls, 1);
  EXPECT_TRUE(rec.waits.empty());
}

TEST(ChatClient, TokenNeverReachesLogsOrErrors) {
  ::setenv("SAFETUNE_TEST_CHAT_TOKEN", kSentinel, 1);
  ChatEndpointConfig cfg;
  cfg.token_env = "SAFETUNE_TEST_CHAT_TOKEN";
  Recorder rec;
  auto transport = std::make_shared<FunctionChatTransport>(
      [&](const ChatRequest&) -> std::string {
        throw EndpointError(std::string("bad key ") + kSentinel, true, 500);
      });
  ChatClient client(cfg, transport, RetryPolicy{}, rec.Sleep(), rec.Log());
  try {
    client.Complete({});
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_THAT(e.what(), Not(HasSubstr(kSentinel)));
    EXPECT_THAT(e.what(), HasSubstr("[redacted]"));
  }
  EXPECT_FALSE(rec.lines.empty());
  EXPECT_THAT(rec.All(), Not(HasSubstr(kSentinel)));
}

TEST(ChatClient, RateLimitWaitsGoThroughSleeper) {
  ChatEndpointConfig cfg;
  cfg.requests_per_minute = 1e9;
  auto transport = std::make_shared<FunctionChatTransport>(
      [](const ChatRequest&) { return std::string("x"); });
  ChatClient client(cfg, transport, {}, RealSleep, nullptr);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(client.Complete({}).text, "x");
}

TEST(HttpChatTransport, TalksToCompatibleEndpoint) {
  ::setenv("SAFETUNE_TEST_CHAT_TOKEN", kSentinel, 1);
  std::string auth, body;
  LoopbackServer server(
      [&](const httplib::Request& req, httplib::Response& res) {
        auth = req.get_header_value("Authorization");
        body = req.body;
        res.set_content(OpenAiBody("generated"), "application/json");
      },
      "/v1/chat/completions");
  ChatEndpointConfig cfg;
  cfg.base_url = server.url();
  cfg.model = "m";
  cfg.token_env = "SAFETUNE_TEST_CHAT_TOKEN";
  ChatClient client(cfg, std::make_shared<HttpChatTransport>(cfg), {},
                    [](milliseconds) {}, nullptr);
  ChatRequest r;
  r.messages = {{"user", "hello"}};
  EXPECT_EQ(client.Complete(r).text, "generated");
  EXPECT_EQ(auth, std::string("Bearer ") + kSentinel);
  EXPECT_EQ(json::parse(body).at("model"), "m");
}

TEST(HttpChatTransport, RetriesRateLimitStatus) {
  std::atomic<int> calls{0};
  LoopbackServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls == 1) {
      res.status = 429;
      return;
    }
    res.set_content(OpenAiBody("second"), "application/json");
  });
  ChatEndpointConfig cfg;
  cfg.base_url = server.url();
  cfg.token_env = "";
  Recorder rec;
  ChatClient client(cfg, std::make_shared<HttpChatTransport>(cfg), {},
                    rec.Sleep(), rec.Log());
  const auto r = client.Complete({});
  EXPECT_EQ(r.text, "second");
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(rec.waits.size(), 1u);
}

}  // namespace
}  // namespace safetune
