// Copyright 2026 The abmetrics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef ABMETRICS_RANDOM_HPP_
#define ABMETRICS_RANDOM_HPP_

// Seeded random streams.
//
// Every stream is a std::mt19937_64 initialised through std::seed_seq from
// (seed, purpose, index); both algorithms are fully specified by the C++
// standard, so output does not depend on the standard library vendor.
// Distributions are implemented here rather than taken from <random>, whose
// distribution algorithms are implementation-defined.

#include <cmath>
#include <cstdint>
#include <random>

namespace abmetrics {

enum class StreamPurpose : std::uint32_t {
  kSynthCorpus = 1,
  kParametricAa = 2,
  kSplitAa = 3,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index)
  {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, bound), bound > 0. Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % bound;
  }

  // Standard normal by Marsaglia's polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace abmetrics

#endif  // ABMETRICS_RANDOM_HPP_
