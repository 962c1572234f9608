// src/numkit.cc

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

#include "mtrnet/numkit.h"

#include <cstdlib>
#include <numbers>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mtrnet {

namespace {
// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelWork = 1 << 14;
}  // namespace

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto &r : rows) {
    if (r.size() != cols_) throw Error("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

double Rng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  double u2 = Uniform();
  double rad = std::sqrt(-2.0 * std::log(u1));
  double ang = 2.0 * std::numbers::pi * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

std::size_t Rng::Index(std::size_t n) {
  if (n == 0) throw Error("Rng::Index: empty range");
  return static_cast<std::size_t>(Uniform() * static_cast<double>(n)) % n;
}

void CheckDim(std::size_t got, std::size_t want, const char *what) {
  if (got != want) {
    std::ostringstream os;
    os << "dimension mismatch: " << what << " has " << got << ", expected " << want;
    throw Error(os.str());
  }
}

Vector Affine(const Matrix &w, std::span<const double> x, std::span<const double> b) {
  if (w.cols() != x.size() || w.rows() != b.size()) {
    std::ostringstream os;
    os << "Affine: dimension mismatch, W is " << w.rows() << "x" << w.cols()
       << ", x has " << x.size() << ", b has " << b.size();
    throw Error(os.str());
  }
  Vector y(std::vector<double>(b.begin(), b.end()));
  GemvAcc(w, x, y.span());
  return y;
}

Vector Elementwise(Activation kind, std::span<const double> v) {
  Vector out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    out[k] = kind == Activation::kSigmoid ? Sigmoid(v[k]) : std::tanh(v[k]);
  return out;
}

Vector Softmax(std::span<const double> v) {
  if (v.empty()) throw Error("Softmax: empty input");
  double mx = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = std::exp(v[k] - mx);
    sum += out[k];
  }
  for (auto &p : out) p /= sum;
  return out;
}

double CentralDiff(const std::function<double(std::span<const double>)> &f,
                   std::span<const double> theta, std::size_t index, double eps) {
  if (!(eps > 0.0)) throw Error("CentralDiff: eps must be positive");
  if (index >= theta.size()) throw Error("CentralDiff: index out of range");
  std::vector<double> work(theta.begin(), theta.end());
  work[index] = theta[index] + eps;
  double fp = f(work);
  work[index] = theta[index] - eps;
  double fm = f(work);
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw Error("CentralDiff: objective is not finite");
  return (fp - fm) / (2.0 * eps);
}

namespace ref {

void GemvAcc(const Matrix &w, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = w.rows(), cols = w.cols();
  const double *wd = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double *wr = wd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
}

void GemvTAcc(const Matrix &w, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = w.rows(), cols = w.cols();
  const double *wd = w.data();
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += wd[r * cols + c] * x[r];
    y[c] += acc;
  }
}

void OuterAcc(std::span<const double> a, std::span<const double> b, Matrix &g) {
  const std::size_t rows = g.rows(), cols = g.cols();
  double *gd = g.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double ar = a[r];
    double *gr = gd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) gr[c] += ar * b[c];
  }
}

}  // namespace ref

void GemvAcc(const Matrix &w, std::span<const double> x, std::span<double> y) {
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(w.rows());
  const std::size_t cols = w.cols();
  const double *wd = w.data();
#pragma omp parallel for schedule(static) if (w.size() >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double *wr = wd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
}

void GemvTAcc(const Matrix &w, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = w.rows();
  const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(w.cols());
  const double *wd = w.data();
#pragma omp parallel for schedule(static) if (w.size() >= kParallelWork)
  for (std::ptrdiff_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += wd[r * cols + c] * x[r];
    y[c] += acc;
  }
}

void OuterAcc(std::span<const double> a, std::span<const double> b, Matrix &g) {
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(g.rows());
  const std::size_t cols = g.cols();
  double *gd = g.data();
#pragma omp parallel for schedule(static) if (g.size() >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double ar = a[r];
    double *gr = gd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) gr[c] += ar * b[c];
  }
}

int ConfigureThreadsFromEnv() {
#ifdef _OPENMP
  if (const char *env = std::getenv("MTRNET_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) omp_set_num_threads(std::min(n, omp_get_num_procs() * 4));
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mtrnet
