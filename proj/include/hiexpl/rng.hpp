/*
 * Copyright 2026 The hiexpl Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HIEXPL_RNG_HPP_
#define HIEXPL_RNG_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace hiexpl {

// xoshiro256** seeded through SplitMix64.
//
// Every draw is computed with explicit integer arithmetic, and uniform()
// takes the top 53 bits of the output, so a seed yields the same sequence on
// every platform and compiler. The std:: distributions are deliberately not
// used because their algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Seed for an independent stream, e.g. one per (instance, phrase) task.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  // Index drawn proportionally to non-negative weights (need not sum to 1).
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace hiexpl

#endif  // HIEXPL_RNG_HPP_
