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

#include "safetune/retry.h"

#include <algorithm>
#include <cmath>
#include <thread>

namespace safetune {

void RealSleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

std::chrono::milliseconds RetryPolicy::BackoffFor(int retry) const {
  const int shift = std::clamp(retry, 0, 30);
  const auto delay = backoff_base.count() * (int64_t{1} << shift);
  return std::chrono::milliseconds(std::min<int64_t>(delay, max_backoff.count()));
}

RateLimiter::RateLimiter(double requests_per_minute, double burst, Clock clock,
                         Sleeper sleep)
    : rate_per_ms_(requests_per_minute / 60000.0),
      capacity_(std::max(1.0, burst)),
      tokens_(capacity_),
      clock_(clock ? std::move(clock) : [] { return std::chrono::steady_clock::now(); }),
      sleep_(sleep ? std::move(sleep) : Sleeper(RealSleep)),
      last_(clock_()) {}

void RateLimiter::Refill() {
  const auto now = clock_();
  const double elapsed =
      std::chrono::duration<double, std::milli>(now - last_).count();
  last_ = now;
  tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
}

bool RateLimiter::TryAcquire() {
  if (rate_per_ms_ <= 0) return true;
  std::lock_guard<std::mutex> lock(mu_);
  Refill();
  if (tokens_ < 1.0) return false;
  tokens_ -= 1.0;
  return true;
}

void RateLimiter::Acquire() {
  if (rate_per_ms_ <= 0) return;
  for (;;) {
    std::chrono::milliseconds wait{0};
    {
      std::lock_guard<std::mutex> lock(mu_);
      Refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::milliseconds(
          static_cast<int64_t>(std::ceil((1.0 - tokens_) / rate_per_ms_)));
    }
    sleep_(std::max(wait, std::chrono::milliseconds(1)));
  }
}

}  // namespace safetune
