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

#ifndef SAFETUNE_SRC_HTTP_POST_H_
#define SAFETUNE_SRC_HTTP_POST_H_

#include <chrono>
#include <string>

namespace safetune::internal {

// POSTs a JSON body and returns the response body. Connection failures,
// timeouts, 429 and 5xx raise transient EndpointErrors; other non-2xx
// statuses raise terminal ones. `bearer` is sent as an Authorization header
// when non-empty and never appears in error messages.
std::string PostJson(const std::string& base_url, const std::string& path,
                     const std::string& body, const std::string& bearer,
                     std::chrono::milliseconds timeout);

// Value of the named environment variable, or "" when unset or name empty.
std::string ReadEnv(const std::string& name);

}  // namespace safetune::internal

#endif  // SAFETUNE_SRC_HTTP_POST_H_
