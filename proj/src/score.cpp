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

#include "hiexpl/score.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "hiexpl/error.hpp"

namespace hiexpl {

AttributionScore::AttributionScore(Vec per_class, std::size_t target_class)
    : per_class_(std::move(per_class)), target_class_(target_class) {
  if (target_class_ >= per_class_.size()) {
    throw InvalidArgument("target class " + std::to_string(target_class_) +
                          " out of range for " +
                          std::to_string(per_class_.size()) + " classes");
  }
  require_finite(per_class_.span(), "attribution score");
  value_ = per_class_[target_class_];
}

double class_margin(const AttributionScore& score, std::size_t predicted) {
  const Vec& pc = score.per_class();
  if (pc.size() < 2) throw InvalidArgument("class_margin needs >= 2 classes");
  if (predicted >= pc.size()) {
    throw InvalidArgument("class_margin: predicted class out of range");
  }
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < pc.size(); ++c) {
    if (c != predicted) best_other = std::max(best_other, pc[c]);
  }
  return pc[predicted] - best_other;
}

double display_value(const AttributionScore& score) {
  const Vec& pc = score.per_class();
  if (pc.size() == 2) return pc[1] - pc[0];
  return class_margin(score, score.target_class());
}

}  // namespace hiexpl
