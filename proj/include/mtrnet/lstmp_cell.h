// include/mtrnet/lstmp_cell.h

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

#ifndef MTRNET_LSTMP_CELL_H_
#define MTRNET_LSTMP_CELL_H_

#include <array>
#include <span>
#include <string>

#include "mtrnet/numkit.h"

namespace mtrnet {

struct CellDims {
  std::size_t input_dim = 0;
  std::size_t cell_dim = 0;
  std::size_t rproj_dim = 0;
  std::size_t pproj_dim = 0;
  std::size_t output_dim = 0;

  /// Throws unless every dimension is at least one.
  void Validate() const;
  friend bool operator==(const CellDims &, const CellDims &) = default;
};

/// Gate slots, in sweep-table column order: input, forget,
/// output, and the cell input nonlinearity g(.).
enum Gate : int { kGateI = 0, kGateF = 1, kGateO = 2, kGateG = 3 };
inline constexpr int kNumGates = 4;
inline constexpr char kGateLetters[kNumGates] = {'i', 'f', 'o', 'g'};

/// Weights of one projected LSTM tower. Peepholes are vectors: the cell to
/// gate connections are diagonal by construction.
struct LstmpParams {
  CellDims dims;
  std::array<Matrix, kNumGates> w_x;  // W_ix, W_fx, W_ox, W_cx
  std::array<Matrix, kNumGates> w_r;  // W_ir, W_fr, W_or, W_cr
  Vector w_ic, w_fc, w_oc;
  std::array<Vector, kNumGates> b;    // b_i, b_f, b_o, b_c
  Matrix w_rm, w_pm;
  Matrix w_yr, w_yp;
  Vector b_y;

  static LstmpParams Zeros(const CellDims &dims);

  /// Visits every tensor as (name, flat data) in the fixed serialization
  /// order: W_ix W_fx W_ox W_cx, W_ir W_fr W_or W_cr, w_ic w_fc w_oc,
  /// b_i b_f b_o b_c, W_rm W_pm W_yr W_yp b_y.
  template <class F>
  void ForEachTensor(F &&f) {
    VisitImpl(*this, f);
  }
  template <class F>
  void ForEachTensor(F &&f) const {
    VisitImpl(*this, f);
  }

  std::size_t NumParams() const;
  friend bool operator==(const LstmpParams &, const LstmpParams &) = default;

 private:
  template <class Self, class F>
  static void VisitImpl(Self &p, F &f) {
    static const char *kWx[] = {"W_ix", "W_fx", "W_ox", "W_cx"};
    static const char *kWr[] = {"W_ir", "W_fr", "W_or", "W_cr"};
    static const char *kB[] = {"b_i", "b_f", "b_o", "b_c"};
    for (int g = 0; g < kNumGates; ++g) f(kWx[g], p.w_x[g].span());
    for (int g = 0; g < kNumGates; ++g) f(kWr[g], p.w_r[g].span());
    f("w_ic", p.w_ic.span());
    f("w_fc", p.w_fc.span());
    f("w_oc", p.w_oc.span());
    for (int g = 0; g < kNumGates; ++g) f(kB[g], p.b[g].span());
    f("W_rm", p.w_rm.span());
    f("W_pm", p.w_pm.span());
    f("W_yr", p.w_yr.span());
    f("W_yp", p.w_yp.span());
    f("b_y", p.b_y.span());
  }
};

struct CellState {
  Vector c, r, p;
  static CellState Zeros(const CellDims &dims);
};

/// Gradients with respect to a CellState.
struct StateGrad {
  Vector dc, dr, dp;
  static StateGrad Zeros(const CellDims &dims);
};

/// Forward quantities kept for the backward pass.
struct StepCache {
  Vector x;
  Vector c_prev, r_prev;
  Vector i, f, o;
  Vector g_pre, g;
  Vector c, tanh_c, m, r, p;
};

/// Optional additive terms on the four gate pre-activations, indexed by
/// Gate. Empty vectors mean no injection for that gate.
struct GateInjection {
  std::array<Vector, kNumGates> add;
};

struct StepOutput {
  CellState state;
  Vector y;
  StepCache cache;
};

struct StepBackwardOutput {
  Vector dx;
  StateGrad dprev;
  /// Loss gradient with respect to each gate pre-activation.
  std::array<Vector, kNumGates> dpre;
};

/// Uniform draws in [-scale, scale] for every entry, visiting tensors in
/// ForEachTensor order, except b_f which is set to `forget_bias`.
LstmpParams InitParams(const CellDims &dims, Rng &rng, double scale,
                       double forget_bias = 1.0);

/// One frame of the projected LSTM recurrence. `inject`, when given, is added
/// to the gate pre-activations before the nonlinearities.
StepOutput StepForward(const LstmpParams &params, std::span<const double> x,
                       const CellState &prev, const GateInjection *inject = nullptr);

/// Reverse-mode step. Parameter gradients are accumulated into `grads`
/// (which must be shaped like `params`); dx, the previous-state gradient and
/// the gate pre-activation gradients are returned.
StepBackwardOutput StepBackward(const LstmpParams &params, const StepCache &cache,
                                std::span<const double> dy, const StateGrad &dnext,
                                LstmpParams &grads);

/// Convenience form returning fresh parameter gradients.
std::pair<LstmpParams, StepBackwardOutput> StepBackward(
    const LstmpParams &params, const StepCache &cache, std::span<const double> dy,
    const StateGrad &dnext);

void CheckShapes(const LstmpParams &params);

}  // namespace mtrnet

#endif  // MTRNET_LSTMP_CELL_H_
