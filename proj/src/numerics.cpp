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

#include "hiexpl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hiexpl/error.hpp"

namespace hiexpl {
namespace {

void check_same_length(const Vec& a, const Vec& b, const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": length mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("Mat: expected " + std::to_string(rows_ * cols_) +
                         " values, got " + std::to_string(values_.size()));
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Mat: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string_view activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kSigmoid:
      return "sigmoid";
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kReLU:
      return "relu";
    case ActivationKind::kIdentity:
      return "identity";
  }
  return "unknown";
}

double activate(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::kSigmoid:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case ActivationKind::kTanh:
      return std::tanh(x);
    case ActivationKind::kReLU:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::kIdentity:
      return x;
  }
  return x;
}

Vec apply_activation(ActivationKind kind, const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = activate(kind, v[i]);
  return out;
}

double activation_grad_from_output(ActivationKind kind, double y) {
  switch (kind) {
    case ActivationKind::kSigmoid:
      return y * (1.0 - y);
    case ActivationKind::kTanh:
      return 1.0 - y * y;
    case ActivationKind::kReLU:
      return y > 0.0 ? 1.0 : 0.0;
    case ActivationKind::kIdentity:
      return 1.0;
  }
  return 1.0;
}

Vec matvec(const Mat& m, const Vec& v) {
  if (m.cols() != v.size()) {
    throw DimensionError("matvec: matrix has " + std::to_string(m.cols()) +
                         " cols, vector has " + std::to_string(v.size()));
  }
  Vec out(m.rows());
  const double* x = v.data();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* w = m.data() + r * m.cols();
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
  require_finite(out.span(), "matvec");
  return out;
}

Vec matvec_transposed(const Mat& m, const Vec& v) {
  if (m.rows() != v.size()) {
    throw DimensionError("matvec_transposed: matrix has " +
                         std::to_string(m.rows()) + " rows, vector has " +
                         std::to_string(v.size()));
  }
  Vec out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = v[r];
    if (s == 0.0) continue;
    const double* w = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += w[c] * s;
  }
  require_finite(out.span(), "matvec_transposed");
  return out;
}

Vec operator+(const Vec& a, const Vec& b) {
  check_same_length(a, b, "add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec operator-(const Vec& a, const Vec& b) {
  check_same_length(a, b, "sub");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec operator*(double s, const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

Vec& operator+=(Vec& a, const Vec& b) {
  check_same_length(a, b, "add");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

Vec& operator-=(Vec& a, const Vec& b) {
  check_same_length(a, b, "sub");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

Vec hadamard(const Vec& a, const Vec& b) {
  check_same_length(a, b, "hadamard");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + static_cast<long>(a.size()));
  return out;
}

double dot(const Vec& a, const Vec& b) {
  check_same_length(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const Vec& a, const Vec& b) {
  check_same_length(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

std::size_t argmax(const Vec& v) {
  if (v.empty()) throw DimensionError("argmax: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Vec softmax(const Vec& logits) {
  if (logits.empty()) throw DimensionError("softmax: empty vector");
  const double m = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

void add_outer(Mat& m, const Vec& a, const Vec& b, double scale) {
  if (m.rows() != a.size() || m.cols() != b.size()) {
    throw DimensionError("add_outer: shape mismatch");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = scale * a[r];
    if (s == 0.0) continue;
    double* w = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) w[c] += s * b[c];
  }
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> values, std::string_view what) {
  if (!all_finite(values)) {
    throw NumericError(std::string(what) + ": non-finite value");
  }
}

}  // namespace hiexpl
