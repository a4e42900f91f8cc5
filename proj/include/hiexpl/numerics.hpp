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

// Minimal dense linear algebra over 64-bit floats.
//
// Vec and Mat are plain value types. Lengths and shapes are fixed at
// construction; binary operations check shapes and throw DimensionError on
// mismatch. Everything here is a pure function of its inputs.

#ifndef HIEXPL_NUMERICS_HPP_
#define HIEXPL_NUMERICS_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace hiexpl {

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  Vec(std::initializer_list<double> init) : values_(init) {}
  explicit Vec(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const Vec&, const Vec&) = default;

 private:
  std::vector<double> values_;
};

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  // Row-major values; throws DimensionError if the count is wrong.
  Mat(std::size_t rows, std::size_t cols, std::vector<double> values);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return std::span<double>(values_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class ActivationKind { kSigmoid, kTanh, kReLU, kIdentity };

std::string_view activation_name(ActivationKind kind);

double activate(ActivationKind kind, double x);
Vec apply_activation(ActivationKind kind, const Vec& v);

// Derivative of the activation expressed through its output y = f(x); valid
// for every kind because each is monotone with a closed-form derivative in y.
double activation_grad_from_output(ActivationKind kind, double y);

Vec matvec(const Mat& m, const Vec& v);
// m^T v.
Vec matvec_transposed(const Mat& m, const Vec& v);

Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double s, const Vec& v);
Vec& operator+=(Vec& a, const Vec& b);
Vec& operator-=(Vec& a, const Vec& b);
Vec hadamard(const Vec& a, const Vec& b);
Vec concat(const Vec& a, const Vec& b);

double dot(const Vec& a, const Vec& b);
double max_abs(const Vec& v);
double max_abs_diff(const Vec& a, const Vec& b);
std::size_t argmax(const Vec& v);

// Numerically stable softmax.
Vec softmax(const Vec& logits);

// m += scale * a b^T.
void add_outer(Mat& m, const Vec& a, const Vec& b, double scale = 1.0);

bool all_finite(std::span<const double> values);
// Throws NumericError naming `what` when any entry is NaN or infinite.
void require_finite(std::span<const double> values, std::string_view what);

}  // namespace hiexpl

#endif  // HIEXPL_NUMERICS_HPP_
