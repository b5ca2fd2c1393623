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

#include "safetune/providers.h"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gtest/gtest.h"
#include "loopback_server.h"
#include "nlohmann/json.hpp"

namespace safetune {
namespace {

using nlohmann::json;
using test_support::LoopbackServer;

std::string TempFile(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path.string();
}

RetryPolicy FastRetry() {
  RetryPolicy p;
  p.backoff_base = std::chrono::milliseconds(1);
  return p;
}

TEST(HashedEmbedding, StableAndDistinct) {
  HashedEmbeddingProvider p;
  const auto a = p.Embed({"van", "bus", "van"});
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].size(), 64u);
  EXPECT_EQ(a[0], a[2]);
  EXPECT_NE(a[0], a[1]);
  EXPECT_EQ(HashedEmbeddingProvider().Embed({"van"})[0], a[0]);
  EXPECT_NE(HashedEmbeddingProvider(64, 1).Embed({"van"})[0], a[0]);
  for (double x : a[1]) {
    EXPECT_GE(x, -1.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(OneHotEmbedding, OrthonormalAndRejectsUnknown) {
  OneHotEmbeddingProvider p({"a", "b", "c"});
  const auto v = p.Embed({"c", "a"});
  EXPECT_EQ(v[0], (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(v[1], (std::vector<double>{1, 0, 0}));
  EXPECT_THROW(p.Embed({"z"}), InvalidArgument);
}

TEST(FixtureEmbedding, ReplaysByTokenList) {
  const auto path = TempFile(
      "safetune_embed_fixture.jsonl",
      R"({"tokens": ["a", "b"], "vectors": [[1, 0], [0, 1]]})"
      "\n\n"
      R"({"tokens": ["c"], "vectors": [[0.5, 0.5]]})"
      "\n");
  const auto p = FixtureEmbeddingProvider::FromFile(path);
  EXPECT_EQ(p.Embed({"c"}), (std::vector<std::vector<double>>{{0.5, 0.5}}));
  EXPECT_EQ(p.Embed({"a", "b"})[1], (std::vector<double>{0, 1}));
  try {
    p.Embed({"b", "a"});
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_FALSE(e.transient());
  }
}

TEST(FixtureEmbedding, MalformedLineReportsLineNumber) {
  const auto path = TempFile("safetune_embed_bad.jsonl",
                             "{\"tokens\": [\"a\"], \"vectors\": [[1]]}\n{oops\n");
  try {
    FixtureEmbeddingProvider::FromFile(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.index(), 2u);
  }
}

TEST(FixtureEmbedding, MissingFile) {
  EXPECT_THROW(FixtureEmbeddingProvider::FromFile("/nonexistent/x.jsonl"),
               DataError);
}

TEST(FixtureBleurt, ReplaysPairs) {
  const auto path = TempFile(
      "safetune_bleurt_fixture.jsonl",
      R"({"pairs": [{"candidate": "x", "reference": "y"}, {"candidate": "p", "reference": "q"}], "scores": [0.25, -0.5]})"
      "\n");
  auto p = FixtureBleurtProvider::FromFile(path);
  EXPECT_EQ(p.Score({{"p", "q"}, {"x", "y"}}), (std::vector<double>{-0.5, 0.25}));
  EXPECT_THROW(p.Score({{"x", "q"}}), EndpointError);
}

TEST(HttpEmbedding, RoundTripWithBearerToken) {
  ::setenv("SAFETUNE_TEST_EMBED_TOKEN", "sekrit", 1);
  std::string seen_auth;
  LoopbackServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto tokens = json::parse(req.body).at("tokens");
    json vectors = json::array();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      vectors.push_back({static_cast<double>(i), 1.0});
    }
    res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
  });
  HttpEmbeddingProvider p({server.url(), "/embed", "SAFETUNE_TEST_EMBED_TOKEN"},
                          FastRetry());
  const auto v = p.Embed({"a", "b", "c"});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[2], (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(seen_auth, "Bearer sekrit");
}

TEST(HttpEmbedding, RetriesServerErrors) {
  std::atomic<int> calls{0};
  LoopbackServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"vectors": [[1, 2]]})", "application/json");
  });
  HttpEmbeddingProvider p({server.url(), "/embed", ""}, FastRetry());
  EXPECT_EQ(p.Embed({"a"})[0], (std::vector<double>{1, 2}));
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpEmbedding, AuthFailureIsTerminal) {
  std::atomic<int> calls{0};
  LoopbackServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
  });
  HttpEmbeddingProvider p({server.url(), "/embed", ""}, FastRetry());
  try {
    p.Embed({"a"});
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_FALSE(e.transient());
    EXPECT_EQ(e.status(), 401);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(HttpEmbedding, WrongVectorCountIsRejected) {
  LoopbackServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors": [[1, 2]]})", "application/json");
  });
  HttpEmbeddingProvider p({server.url(), "/embed", ""}, FastRetry());
  EXPECT_THROW(p.Embed({"a", "b"}), EndpointError);
}

TEST(HttpEmbedding, UnreachableHostIsTransient) {
  RetryPolicy once;
  once.max_attempts = 1;
  HttpEmbeddingProvider p(
      {"http://127.0.0.1:1", "/embed", "", std::chrono::milliseconds(200)}, once);
  try {
    p.Embed({"a"});
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_TRUE(e.transient());
  }
}

TEST(HttpBleurt, ScoresPairsInOrder) {
  LoopbackServer server([&](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body);
    json scores = json::array();
    for (const auto& p : body.at("pairs")) {
      scores.push_back(p.at("candidate") == p.at("reference") ? 1.0 : 0.0);
    }
    res.set_content(json{{"scores", scores}}.dump(), "application/json");
  });
  HttpBleurtProvider p({server.url(), "/bleurt", ""}, FastRetry());
  EXPECT_EQ(p.Score({{"a", "a"}, {"a", "b"}}), (std::vector<double>{1.0, 0.0}));
}

TEST(HttpBleurt, MalformedResponse) {
  LoopbackServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  HttpBleurtProvider p({server.url(), "/bleurt", ""}, FastRetry());
  EXPECT_THROW(p.Score({{"a", "a"}}), EndpointError);
}

}  // namespace
}  // namespace safetune
