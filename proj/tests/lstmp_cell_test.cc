// tests/lstmp_cell_test.cc

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

#include <cmath>

#include <gtest/gtest.h>

#include "mtrnet/lstmp_cell.h"
#include "mtrnet/reference.h"

namespace mtrnet {
namespace {

CellDims Dims(std::size_t i, std::size_t n, std::size_t r, std::size_t p, std::size_t o) {
  CellDims d;
  d.input_dim = i;
  d.cell_dim = n;
  d.rproj_dim = r;
  d.pproj_dim = p;
  d.output_dim = o;
  return d;
}

// Only W_cx, W_rm, W_pm set to one; everything else zero.
LstmpParams ScalarCell() {
  LstmpParams p = LstmpParams::Zeros(Dims(1, 1, 1, 1, 1));
  p.w_x[kGateG](0, 0) = 1.0;
  p.w_rm(0, 0) = 1.0;
  p.w_pm(0, 0) = 1.0;
  p.w_yr(0, 0) = 2.0;
  p.w_yp(0, 0) = -1.0;
  p.b_y[0] = 0.25;
  return p;
}

TEST(LstmpCellTest, ScalarForwardByHand) {
  LstmpParams p = ScalarCell();
  StepOutput s = StepForward(p, Vector{1.0}, CellState::Zeros(p.dims));
  const double c = 0.5 * std::tanh(1.0);
  const double m = 0.5 * std::tanh(c);
  EXPECT_DOUBLE_EQ(s.cache.i[0], 0.5);
  EXPECT_DOUBLE_EQ(s.cache.f[0], 0.5);
  EXPECT_DOUBLE_EQ(s.cache.o[0], 0.5);
  EXPECT_NEAR(s.state.c[0], c, 1e-15);
  EXPECT_NEAR(s.cache.m[0], m, 1e-15);
  EXPECT_NEAR(s.state.r[0], m, 1e-15);
  EXPECT_NEAR(s.state.p[0], m, 1e-15);
  EXPECT_NEAR(s.y[0], 2 * m - m + 0.25, 1e-15);
}

TEST(LstmpCellTest, OutputGatePeepholeReadsCurrentCell) {
  LstmpParams p = ScalarCell();
  p.w_oc[0] = 1.0;
  StepOutput s = StepForward(p, Vector{1.0}, CellState::Zeros(p.dims));
  const double c = 0.5 * std::tanh(1.0);
  // Previous cell is zero, so sigma(c_prev) would give exactly 0.5.
  EXPECT_NEAR(s.cache.o[0], 1.0 / (1.0 + std::exp(-c)), 1e-15);
  EXPECT_NEAR(s.cache.m[0], s.cache.o[0] * std::tanh(c), 1e-15);
}

TEST(LstmpCellTest, InputForgetPeepholesReadPreviousCell) {
  LstmpParams p = ScalarCell();
  p.w_ic[0] = 2.0;
  p.w_fc[0] = -1.0;
  CellState prev = CellState::Zeros(p.dims);
  prev.c[0] = 0.5;
  StepOutput s = StepForward(p, Vector{1.0}, prev);
  const double i = 1.0 / (1.0 + std::exp(-1.0));
  const double f = 1.0 / (1.0 + std::exp(0.5));
  EXPECT_NEAR(s.cache.i[0], i, 1e-15);
  EXPECT_NEAR(s.cache.f[0], f, 1e-15);
  EXPECT_NEAR(s.state.c[0], f * 0.5 + i * std::tanh(1.0), 1e-15);
}

TEST(LstmpCellTest, ParamCount) {
  // 4*5*(3+3) + 3*5 + 4*5 + 5*3 + 5*2 + 4*3 + 4*2 + 4
  LstmpParams p = LstmpParams::Zeros(Dims(3, 5, 3, 2, 4));
  EXPECT_EQ(p.NumParams(), 204u);
  EXPECT_EQ(p.w_ic.size(), 5u);
  EXPECT_EQ(p.w_fc.size(), 5u);
  EXPECT_EQ(p.w_oc.size(), 5u);
}

TEST(LstmpCellTest, TensorOrder) {
  std::vector<std::string> names;
  LstmpParams::Zeros(Dims(1, 1, 1, 1, 1)).ForEachTensor(
      [&](const char *n, std::span<const double>) { names.emplace_back(n); });
  const std::vector<std::string> want = {"W_ix", "W_fx", "W_ox", "W_cx", "W_ir", "W_fr", "W_or",
                                         "W_cr", "w_ic", "w_fc", "w_oc", "b_i",  "b_f",  "b_o",
                                         "b_c",  "W_rm", "W_pm", "W_yr", "W_yp", "b_y"};
  EXPECT_EQ(names, want);
}

TEST(LstmpCellTest, InitRangeForgetBiasAndDeterminism) {
  const CellDims d = Dims(4, 6, 3, 2, 5);
  Rng r1(11), r2(11), r3(12);
  LstmpParams a = InitParams(d, r1, 0.1, 1.0);
  LstmpParams b = InitParams(d, r2, 0.1, 1.0);
  LstmpParams c = InitParams(d, r3, 0.1, 1.0);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  a.ForEachTensor([&](const char *name, std::span<const double> t) {
    for (double v : t) {
      if (std::string(name) == "b_f") {
        EXPECT_EQ(v, 1.0);
      } else {
        EXPECT_GE(v, -0.1) << name;
        EXPECT_LE(v, 0.1) << name;
      }
    }
  });
  Rng r4(11);
  LstmpParams z = InitParams(d, r4, 0.1, 0.0);
  for (double v : z.b[kGateF]) EXPECT_EQ(v, 0.0);
}

TEST(LstmpCellTest, InitRejectsBadInput) {
  Rng r(1);
  EXPECT_THROW(InitParams(Dims(0, 2, 2, 2, 2), r, 0.1), Error);
  EXPECT_THROW(InitParams(Dims(1, 2, 2, 2, 2), r, -0.1), Error);
}

TEST(LstmpCellTest, ForwardShapeErrors) {
  Rng r(1);
  LstmpParams p = InitParams(Dims(3, 4, 2, 2, 2), r, 0.1);
  EXPECT_THROW(StepForward(p, Vector{1, 2}, CellState::Zeros(p.dims)), Error);
  CellState bad = CellState::Zeros(p.dims);
  bad.r = Vector(3);
  EXPECT_THROW(StepForward(p, Vector{1, 2, 3}, bad), Error);
  GateInjection inj;
  inj.add[kGateO] = Vector(7);
  EXPECT_THROW(StepForward(p, Vector{1, 2, 3}, CellState::Zeros(p.dims), &inj), Error);
}

TEST(LstmpCellTest, InjectionAddsToPreActivation) {
  Rng r(2);
  LstmpParams p = InitParams(Dims(2, 3, 2, 1, 2), r, 0.5);
  Vector x{0.3, -0.7};
  GateInjection inj;
  inj.add[kGateG] = Vector{0.1, 0.2, -0.3};
  StepOutput a = StepForward(p, x, CellState::Zeros(p.dims), &inj);
  LstmpParams q = p;
  for (std::size_t k = 0; k < 3; ++k) q.b[kGateG][k] += inj.add[kGateG][k];
  StepOutput b = StepForward(q, x, CellState::Zeros(q.dims));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a.state.c[k], b.state.c[k], 1e-15);
}

// Test-side finite differences of the long-double reference over a short
// sequence, compared to the analytic BPTT gradient from StepBackward.
TEST(LstmpCellTest, BackwardMatchesFiniteDifferences) {
  const CellDims d = Dims(3, 4, 3, 2, 2);
  Rng r(21);
  LstmpParams p = InitParams(d, r, 0.5, 0.3);
  const std::size_t T = 4;
  std::vector<Vector> frames(T, Vector(d.input_dim)), readout(T, Vector(d.output_dim));
  for (auto &f : frames)
    for (double &v : f) v = r.Uniform(-1, 1);
  for (auto &f : readout)
    for (double &v : f) v = r.Uniform(-1, 1);

  std::vector<StepCache> caches;
  CellState s = CellState::Zeros(d);
  for (const Vector &f : frames) {
    StepOutput o = StepForward(p, f, s);
    caches.push_back(o.cache);
    s = o.state;
  }
  LstmpParams grads = LstmpParams::Zeros(d);
  StateGrad dnext = StateGrad::Zeros(d);
  for (std::size_t t = T; t-- > 0;) {
    StepBackwardOutput b = StepBackward(p, caches[t], readout[t], dnext, grads);
    dnext = b.dprev;
  }

  const long double base = ReferenceCellLoss<long double>(p, frames, readout);
  const double eps = 1e-5;
  std::vector<double> analytic;
  grads.ForEachTensor([&](const char *, std::span<const double> t) {
    analytic.insert(analytic.end(), t.begin(), t.end());
  });
  std::vector<std::pair<std::string, double *>> slots;
  p.ForEachTensor([&](const char *name, std::span<double> t) {
    for (double &v : t) slots.emplace_back(name, &v);
  });
  ASSERT_EQ(slots.size(), analytic.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    double *v = slots[k].second;
    const double keep = *v;
    *v = keep + eps;
    const long double up = ReferenceCellLoss<long double>(p, frames, readout) - base;
    *v = keep - eps;
    const long double dn = ReferenceCellLoss<long double>(p, frames, readout) - base;
    *v = keep;
    const double numeric = static_cast<double>((up - dn) / (2 * eps));
    const double scale = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-12});
    EXPECT_LT(std::abs(numeric - analytic[k]) / scale, 1e-5)
        << slots[k].first << " analytic " << analytic[k] << " numeric " << numeric;
  }
}

TEST(LstmpCellTest, BackwardInputGradient) {
  const CellDims d = Dims(3, 4, 2, 2, 3);
  Rng r(4);
  LstmpParams p = InitParams(d, r, 0.5);
  Vector x{0.2, -0.4, 0.9};
  Vector dy{0.5, -1.0, 0.25};
  StepOutput o = StepForward(p, x, CellState::Zeros(d));
  auto [grads, back] = StepBackward(p, o.cache, dy, StateGrad::Zeros(d));
  for (double v : back.dprev.dp) EXPECT_EQ(v, 0.0);
  for (std::size_t j = 0; j < 3; ++j) {
    auto f = [&](std::span<const double> xx) {
      Vector y = StepForward(p, xx, CellState::Zeros(d)).y;
      double s = 0;
      for (std::size_t k = 0; k < y.size(); ++k) s += dy[k] * y[k];
      return s;
    };
    EXPECT_NEAR(back.dx[j], CentralDiff(f, x, j, 1e-6), 1e-8);
  }
}

}  // namespace
}  // namespace mtrnet
