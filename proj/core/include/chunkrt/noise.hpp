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

#ifndef CHUNKRT_NOISE_HPP_
#define CHUNKRT_NOISE_HPP_

#include <cstdint>

namespace chunkrt {

// SplitMix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

// Derives a child seed from a parent seed and a stream index.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

// Counter-based noise: every draw is a pure function of (seed, step, channel),
// so two rollouts that share a seed see the same disturbance at the same tick
// no matter how many other draws either of them made.
class CounterNoise {
 public:
  explicit CounterNoise(std::uint64_t seed = 0) : seed_(seed) {}

  // Uniform on [0, 1).
  double Uniform(std::uint64_t step, std::uint64_t channel) const;
  // Standard normal (Box-Muller over two uniforms).
  double Gaussian(std::uint64_t step, std::uint64_t channel) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace chunkrt

#endif  // CHUNKRT_NOISE_HPP_
