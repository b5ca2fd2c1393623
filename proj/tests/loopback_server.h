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

// A local HTTP server on 127.0.0.1 for exercising the HTTP clients.
#ifndef SAFETUNE_TESTS_LOOPBACK_SERVER_H_
#define SAFETUNE_TESTS_LOOPBACK_SERVER_H_

#include <string>
#include <thread>

#include "httplib.h"

namespace safetune::test_support {

class LoopbackServer {
 public:
  explicit LoopbackServer(httplib::Server::Handler handler,
                          const std::string& path = "/.*") {
    server_.Post(path, std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LoopbackServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace safetune::test_support

#endif  // SAFETUNE_TESTS_LOOPBACK_SERVER_H_
