// include/mtrnet/numkit.h

// Copyright 2026 mtrnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MTRNET_NUMKIT_H_
#define MTRNET_NUMKIT_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtrnet {

/// Thrown for every contract violation in the library (shape mismatch, bad
/// configuration, malformed file). Carries a message naming the operands.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Dense real vector, 64-bit precision.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> v) : data_(v) {}
  explicit Vector(std::vector<double> v) : data_(std::move(v)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  operator std::span<const double>() const { return data_; }

  void SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }
  const std::vector<double> &raw() const { return data_; }

  friend bool operator==(const Vector &, const Vector &) = default;

 private:
  std::vector<double> data_;
};

/// Dense row-major matrix, 64-bit precision.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  void SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

  friend bool operator==(const Matrix &, const Matrix &) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Seeded 64-bit generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the uniform and normal transforms are
/// implemented here (53-bit mantissa fill and Box-Muller) so draws do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  /// Uniform in [0, 1).
  double Uniform();
  /// Uniform in [lo, hi].
  double Uniform(double lo, double hi);
  double Normal();
  /// Uniform integer in [0, n).
  std::size_t Index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class Activation { kSigmoid, kTanh };

// ---------------------------------------------------------------------------
// Checked operations. These validate shapes and throw mtrnet::Error.

/// W x + b.
Vector Affine(const Matrix &w, std::span<const double> x, std::span<const double> b);

Vector Elementwise(Activation kind, std::span<const double> v);

/// Max-shifted softmax. Throws on empty input.
Vector Softmax(std::span<const double> v);

/// Central difference of f along coordinate `index`.
double CentralDiff(const std::function<double(std::span<const double>)> &f,
                   std::span<const double> theta, std::size_t index, double eps);

inline double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---------------------------------------------------------------------------
// Unchecked kernels used on the hot path. The default versions are OpenMP
// parallel over output rows; each output element is reduced in the same order
// as the serial reference, so both produce bit-identical results.

/// y += W x
void GemvAcc(const Matrix &w, std::span<const double> x, std::span<double> y);
/// y += W^T x
void GemvTAcc(const Matrix &w, std::span<const double> x, std::span<double> y);
/// G += a b^T
void OuterAcc(std::span<const double> a, std::span<const double> b, Matrix &g);

namespace ref {
void GemvAcc(const Matrix &w, std::span<const double> x, std::span<double> y);
void GemvTAcc(const Matrix &w, std::span<const double> x, std::span<double> y);
void OuterAcc(std::span<const double> a, std::span<const double> b, Matrix &g);
}  // namespace ref

/// Caps OpenMP worker count from the MTRNET_THREADS environment variable.
/// Returns the number of threads in effect.
int ConfigureThreadsFromEnv();

void CheckDim(std::size_t got, std::size_t want, const char *what);

}  // namespace mtrnet

#endif  // MTRNET_NUMKIT_H_
