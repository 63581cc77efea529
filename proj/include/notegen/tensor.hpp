// Copyright 2026 The notegen Authors
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

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "notegen/error.hpp"

namespace notegen {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

/// Dense row-major array of doubles, rank 1 to 3. Zero extents are allowed so
/// that empty sequences keep their column structure.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_rank();
    data_.assign(count(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_rank();
    if (data_.size() != count(shape_)) {
      fail(Errc::ShapeMismatch, "data length " + std::to_string(data_.size()) + " does not fill " + shape_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Contiguous view of row i of a rank-2 tensor.
  std::span<double> row(std::size_t i) { return std::span<double>(data_).subspan(i * shape_[1], shape_[1]); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * shape_[1], shape_[1]);
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Tensor&) const = default;

  static std::size_t count(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  void check_rank() const {
    if (shape_.empty() || shape_.size() > 3) fail(Errc::ShapeMismatch, "rank must be 1..3, got " + shape_string(shape_));
  }

  Shape shape_;
  std::vector<double> data_;
};

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(Errc::ShapeMismatch, std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

inline void require_matrix(const Tensor& a, const char* op) {
  if (a.rank() != 2) fail(Errc::ShapeMismatch, std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix products. Each output entry accumulates over k in ascending order,
// so results are reproducible for equal inputs.

namespace detail {

#if defined(__x86_64__) && defined(__has_attribute)
#if __has_attribute(target_clones)
#define NOTEGEN_KERNEL __attribute__((target_clones("avx2", "default")))
#endif
#endif
#ifndef NOTEGEN_KERNEL
#define NOTEGEN_KERNEL
#endif

// out[m,n] += a[m,k] * b[k,n], four output rows per pass over b.
NOTEGEN_KERNEL static void gemm_nn_add(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
                                       std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* o0 = out + i * n;
    double* o1 = o0 + n;
    double* o2 = o1 + n;
    double* o3 = o2 + n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a0 = a[i * k + p], a1 = a[(i + 1) * k + p], a2 = a[(i + 2) * k + p], a3 = a[(i + 3) * k + p];
      const double* br = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = br[j];
        o0[j] += a0 * bv;
        o1[j] += a1 * bv;
        o2[j] += a2 * bv;
        o3[j] += a3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* o = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* br = b + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

// out[m,n] += a[k,m]^T * b[k,n], four rows of b per pass over out.
NOTEGEN_KERNEL static void gemm_tn_add(const double* a, const double* b, double* out, std::size_t k, std::size_t m,
                                       std::size_t n) {
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    const double* b0 = b + p * n;
    const double* b1 = b0 + n;
    const double* b2 = b1 + n;
    const double* b3 = b2 + n;
    for (std::size_t i = 0; i < m; ++i) {
      const double a0 = a[p * m + i], a1 = a[(p + 1) * m + i], a2 = a[(p + 2) * m + i], a3 = a[(p + 3) * m + i];
      double* o = out + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] = o[j] + a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
    }
  }
  for (; p < k; ++p) {
    const double* br = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[p * m + i];
      double* o = out + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

}  // namespace detail

/// a[m,k] * b[k,n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) fail(Errc::ShapeMismatch, "matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  Tensor out({m, n});
  if (m * n != 0) detail::gemm_nn_add(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  return out;
}

/// out[m,n] += a[k,m]^T * b[k,n]
inline void matmul_tn_add(const Tensor& a, const Tensor& b, Tensor& out) {
  detail::require_matrix(a, "matmul_tn");
  detail::require_matrix(b, "matmul_tn");
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) fail(Errc::ShapeMismatch, "matmul_tn: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  if (out.shape() != Shape{m, n}) fail(Errc::ShapeMismatch, "matmul_tn: output is " + shape_string(out.shape()));
  if (m * n != 0) detail::gemm_tn_add(a.data().data(), b.data().data(), out.data().data(), k, m, n);
}

/// a[k,m]^T * b[k,n] -> [m,n]
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  detail::require_matrix(a, "matmul_tn");
  Tensor out({a.dim(1), b.rank() == 2 ? b.dim(1) : 0});
  matmul_tn_add(a, b, out);
  return out;
}

/// a[m,k] * b[n,k]^T -> [m,n]
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  detail::require_matrix(a, "matmul_nt");
  detail::require_matrix(b, "matmul_nt");
  const std::size_t k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) fail(Errc::ShapeMismatch, "matmul_nt: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  Tensor bt({k, n});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt(p, j) = b(j, p);
  return matmul(a, bt);
}

inline Tensor transpose(const Tensor& a) {
  detail::require_matrix(a, "transpose");
  Tensor out({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out(j, i) = a(i, j);
  return out;
}

inline Tensor identity(std::size_t n) {
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Tensor add(const Tensor& a, const Tensor& b) { return detail::zip(a, b, "add", std::plus<>()); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return detail::zip(a, b, "sub", std::minus<>()); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return detail::zip(a, b, "mul", std::multiplies<>()); }
inline Tensor scale(const Tensor& a, double c) {
  return detail::map(a, [c](double x) { return x * c; });
}
inline Tensor sigmoid(const Tensor& a) { return detail::map(a, [](double x) { return sigmoid(x); }); }
inline Tensor tanh(const Tensor& a) { return detail::map(a, [](double x) { return std::tanh(x); }); }

/// a += b, in place.
inline void accumulate(Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "accumulate");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

/// Adds a rank-1 bias to every row of a matrix, in place.
inline void add_row_vector(Tensor& m, const Tensor& v) {
  detail::require_matrix(m, "add_row_vector");
  if (v.rank() != 1 || v.dim(0) != m.dim(1)) {
    fail(Errc::ShapeMismatch, "add_row_vector: " + shape_string(m.shape()) + " + " + shape_string(v.shape()));
  }
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += v[j];
  }
}

/// Column sums of a matrix, summed in row order.
inline Tensor sum_rows(const Tensor& m) {
  detail::require_matrix(m, "sum_rows");
  Tensor out({m.dim(1)});
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

inline bool all_finite(const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace notegen
