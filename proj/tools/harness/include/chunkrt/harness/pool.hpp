// Copyright 2026 The chunkrt Authors
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

#ifndef CHUNKRT_HARNESS_POOL_HPP_
#define CHUNKRT_HARNESS_POOL_HPP_

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chunkrt::harness {

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Work items write to
// their own slots, so results never depend on scheduling. The first exception
// stops the pool and is rethrown.
template <typename Fn>
void ParallelFor(int count, int jobs, Fn&& fn) {
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const int threads_wanted = std::max(1, std::min(jobs, count));
  std::vector<std::thread> threads;
  for (int t = 1; t < threads_wanted; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace chunkrt::harness

#endif  // CHUNKRT_HARNESS_POOL_HPP_
