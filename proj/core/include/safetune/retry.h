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

#ifndef SAFETUNE_RETRY_H_
#define SAFETUNE_RETRY_H_

#include <chrono>
#include <functional>
#include <mutex>
#include <string>

#include "safetune/error.h"

namespace safetune {

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Blocks the calling thread.
void RealSleep(std::chrono::milliseconds d);

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds max_backoff{30000};

  // base * 2^retry, capped at max_backoff. retry is 0 for the first wait.
  std::chrono::milliseconds BackoffFor(int retry) const;
};

// Calls `fn` until it returns, throws a non-transient EndpointError or the
// attempt budget runs out. Every wait goes through `sleep`. `on_retry`
// sees the failure that triggered each wait. The last transient error is
// rethrown when attempts are exhausted.
template <typename Fn>
auto RetryWithBackoff(
    Fn&& fn, const RetryPolicy& policy, const Sleeper& sleep,
    const std::function<void(int attempt, const EndpointError&)>& on_retry =
        nullptr) -> decltype(fn()) {
  const int attempts = policy.max_attempts < 1 ? 1 : policy.max_attempts;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const EndpointError& e) {
      if (!e.transient() || attempt >= attempts) throw;
      if (on_retry) on_retry(attempt, e);
      sleep(policy.BackoffFor(attempt - 1));
    }
  }
}

// Token bucket limiting requests per minute. Thread-safe. A rate of 0
// disables limiting.
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit RateLimiter(double requests_per_minute, double burst = 1.0,
                       Clock clock = nullptr, Sleeper sleep = nullptr);

  // Takes one token, waiting if the bucket is empty.
  void Acquire();

  // Takes one token if available without waiting.
  bool TryAcquire();

 private:
  void Refill();

  double rate_per_ms_;
  double capacity_;
  double tokens_;
  Clock clock_;
  Sleeper sleep_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

}  // namespace safetune

#endif  // SAFETUNE_RETRY_H_
