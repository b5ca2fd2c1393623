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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "http_post.h"

#include <cstdlib>

#include "httplib.h"
#include "safetune/error.h"

namespace safetune::internal {

std::string ReadEnv(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

std::string PostJson(const std::string& base_url, const std::string& path,
                     const std::string& body, const std::string& bearer,
                     std::chrono::milliseconds timeout) {
  httplib::Client client(base_url);
  if (!client.is_valid()) {
    throw EndpointError("invalid endpoint address: " + base_url, false);
  }
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    throw EndpointError("request to " + base_url + path + " failed: " +
                            httplib::to_string(res.error()),
                        true);
  }
  const int status = res->status;
  if (status >= 200 && status < 300) return res->body;
  const bool transient = status == 408 || status == 429 || status >= 500;
  throw EndpointError("endpoint " + base_url + path + " returned HTTP " +
                          std::to_string(status),
                      transient, status);
}

}  // namespace safetune::internal
