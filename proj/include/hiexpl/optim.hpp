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

#ifndef HIEXPL_OPTIM_HPP_
#define HIEXPL_OPTIM_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace hiexpl {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments, one buffer per parameter tensor. Buffers are
// allocated on the first step.
struct AdamState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::int64_t step = 0;
};

// One bias-corrected Adam update. `params[k]` and `grads[k]` must have equal
// lengths, and the tensor list must match the one the state was created
// with; otherwise DimensionError.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads,
               AdamState& state, const AdamConfig& config);

}  // namespace hiexpl

#endif  // HIEXPL_OPTIM_HPP_
