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

#ifndef HIEXPL_SCORE_HPP_
#define HIEXPL_SCORE_HPP_

#include <cstddef>

#include "hiexpl/numerics.hpp"

namespace hiexpl {

// Per-class importance of a phrase plus the component for one target class.
class AttributionScore {
 public:
  AttributionScore() = default;
  // Throws InvalidArgument if target_class is out of range or an entry is
  // not finite.
  AttributionScore(Vec per_class, std::size_t target_class);

  const Vec& per_class() const { return per_class_; }
  std::size_t target_class() const { return target_class_; }
  double value() const { return value_; }
  std::size_t num_classes() const { return per_class_.size(); }

  friend bool operator==(const AttributionScore&, const AttributionScore&) = default;

 private:
  Vec per_class_;
  std::size_t target_class_ = 0;
  double value_ = 0.0;
};

// per_class[predicted] minus the largest other component.
double class_margin(const AttributionScore& score, std::size_t predicted);

// Signed scalar used for display and correlation: class 1 minus class 0 for
// binary tasks, the class margin of the target class otherwise.
double display_value(const AttributionScore& score);

}  // namespace hiexpl

#endif  // HIEXPL_SCORE_HPP_
