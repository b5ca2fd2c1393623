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

#ifndef SAFETUNE_ERROR_H_
#define SAFETUNE_ERROR_H_

#include <stdexcept>
#include <string>

namespace safetune {

// Precondition violated by the caller (bad n, empty reference, unknown
// override field, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input text. `index` is the 1-based line, element or block
// number the problem was found at, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t index = 0)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Well-formed input that violates a data invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or inconsistent configuration (e.g. no persona for a source).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure talking to a remote endpoint. Transient errors are retried by
// the retry helpers; terminal ones (auth, other 4xx) are not.
class EndpointError : public std::runtime_error {
 public:
  EndpointError(const std::string& what, bool transient, int status = 0)
      : std::runtime_error(what), transient_(transient), status_(status) {}
  bool transient() const { return transient_; }
  int status() const { return status_; }

 private:
  bool transient_;
  int status_;
};

}  // namespace safetune

#endif  // SAFETUNE_ERROR_H_
