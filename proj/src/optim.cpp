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

#include "hiexpl/optim.hpp"

#include <cmath>
#include <string>

#include "hiexpl/error.hpp"

namespace hiexpl {

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " params vs " + std::to_string(grads.size()) +
                         " grads");
  }
  if (state.first.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first.emplace_back(p.size(), 0.0);
      state.second.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state has " +
                         std::to_string(state.first.size()) + " tensors");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() ||
        params[k].size() != state.first[k].size()) {
      throw DimensionError("adam_step: tensor " + std::to_string(k) +
                           " shape mismatch");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first[k];
    auto& v = state.second[k];
    const auto g = grads[k];
    auto p = params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace hiexpl
