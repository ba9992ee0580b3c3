// Copyright 2026 The qmetro Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qmetro {

// Evaluates f(0..n-1) on up to `jobs` threads; results are in index order.
// The exception of the lowest failing index is rethrown.
template <class F>
auto parallel_map(size_t n, int jobs, F&& f) -> std::vector<decltype(f(size_t{0}))> {
  using R = decltype(f(size_t{0}));
  std::vector<R> out(n);
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t fail_at = n;
  std::exception_ptr fail;
  auto worker = [&] {
    for (size_t i; (i = next++) < n;) {
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (i < fail_at) fail_at = i, fail = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, int(n)); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (fail) std::rethrow_exception(fail);
  return out;
}

}  // namespace qmetro
