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

#include "chunkrt/noise.hpp"

#include <cmath>
#include <numbers>

namespace chunkrt {

std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return Mix64(Mix64(seed) ^ Mix64(stream + 0x632be59bd9b4e019ULL));
}

double CounterNoise::Uniform(std::uint64_t step, std::uint64_t channel) const {
  const std::uint64_t bits = Mix64(DeriveSeed(seed_, step) ^ Mix64(channel));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double CounterNoise::Gaussian(std::uint64_t step, std::uint64_t channel) const {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - Uniform(step, 2 * channel);
  const double u2 = Uniform(step, 2 * channel + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace chunkrt
