// include/mtrnet/multitask_cell.h

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

#ifndef MTRNET_MULTITASK_CELL_H_
#define MTRNET_MULTITASK_CELL_H_

#include <array>
#include <string>
#include <utility>

#include "mtrnet/lstmp_cell.h"

namespace mtrnet {

/// Which projection of the opposite tower is fed back.
enum Info : int { kInfoR = 0, kInfoP = 1 };
inline constexpr int kNumInfo = 2;

/// Feedback configuration, applied identically in both directions.
/// Compact label syntax is "<targets>:<info>", e.g. "g:r,p" or "ifo:r".
/// An empty target set is written "none".
struct FeedbackConfig {
  std::array<bool, kNumInfo> info{};
  std::array<bool, kNumGates> targets{};

  bool Enabled(int gate, int info_src) const { return targets[gate] && info[info_src]; }
  bool AnyTarget() const;
  bool Full() const;  // info {r,p}, targets {i,f,o,g}
  std::size_t NumLinksPerDirection() const;

  void Validate() const;
  std::string Label() const;
  static FeedbackConfig Parse(const std::string &label);

  friend bool operator==(const FeedbackConfig &, const FeedbackConfig &) = default;
};

/// Direction of a cross link: kIntoA carries LR state into the ASR tower
/// (the W^{al} terms), kIntoL carries ASR state into the LR tower (W^{la}).
enum Direction : int { kIntoA = 0, kIntoL = 1 };

/// Cross-link matrices indexed [direction][gate][info]. Disabled slots hold
/// empty matrices. No biases: the gate bias of the receiving tower covers it.
struct CrossLinks {
  std::array<std::array<std::array<Matrix, kNumInfo>, kNumGates>, 2> w;

  std::size_t Count() const;
  friend bool operator==(const CrossLinks &, const CrossLinks &) = default;
};

struct MultiTaskParams {
  LstmpParams tower_a;  // speech recognition
  LstmpParams tower_l;  // language recognition
  CrossLinks cross;
  FeedbackConfig config;

  /// Same-shaped zero tensors, for gradient and velocity buffers.
  MultiTaskParams ZerosLike() const;
  std::size_t NumParams() const;

  /// Visits towers ("a.", "l." prefixes) then enabled cross links in
  /// [direction][gate][info] order, named e.g. "al.W_gr", "la.W_ip".
  template <class F>
  void ForEachTensor(F &&f) {
    VisitImpl(*this, f);
  }
  template <class F>
  void ForEachTensor(F &&f) const {
    VisitImpl(*this, f);
  }

  friend bool operator==(const MultiTaskParams &, const MultiTaskParams &) = default;

 private:
  template <class Self, class F>
  static void VisitImpl(Self &p, F &f) {
    p.tower_a.ForEachTensor([&](const char *n, auto t) { f(std::string("a.") + n, t); });
    p.tower_l.ForEachTensor([&](const char *n, auto t) { f(std::string("l.") + n, t); });
    for (int d = 0; d < 2; ++d)
      for (int g = 0; g < kNumGates; ++g)
        for (int s = 0; s < kNumInfo; ++s) {
          if (!p.config.Enabled(g, s)) continue;
          std::string name = d == kIntoA ? "al.W_" : "la.W_";
          name += kGateLetters[g];
          name += s == kInfoR ? 'r' : 'p';
          f(name, p.cross.w[d][g][s].span());
        }
  }
};

struct JointState {
  CellState a, l;
  static JointState Zeros(const CellDims &dims_a, const CellDims &dims_l);
};

struct JointStateGrad {
  StateGrad a, l;
  static JointStateGrad Zeros(const CellDims &dims_a, const CellDims &dims_l);
};

struct MtStepCache {
  StepCache a, l;
  /// Opposite-tower projections read by the cross links at this frame.
  Vector r_a_prev, p_a_prev, r_l_prev, p_l_prev;
};

struct MtStepOutput {
  JointState state;
  Vector y_a, y_l;
  MtStepCache cache;
};

struct MtStepBackwardOutput {
  Vector dx;
  JointStateGrad dprev;
};

MultiTaskParams InitMultitask(const CellDims &dims_a, const CellDims &dims_l,
                              const FeedbackConfig &config, Rng &rng, double scale,
                              double forget_bias = 1.0);

MtStepOutput MtStepForward(const MultiTaskParams &params, std::span<const double> x,
                           const JointState &prev);

/// Accumulates parameter gradients (towers and cross links) into `grads`.
/// Cross-link gradients reach the *other* tower's previous-state gradient.
MtStepBackwardOutput MtStepBackward(const MultiTaskParams &params, const MtStepCache &cache,
                                    std::span<const double> dy_a,
                                    std::span<const double> dy_l,
                                    const JointStateGrad &dnext, MultiTaskParams &grads);

/// For the full configuration, returns the two single-task towers whose input
/// is [x_t; r^other_{t-1}; p^other_{t-1}] and which reproduce MtStepForward.
/// Throws for any other configuration.
std::pair<LstmpParams, LstmpParams> BuildAugmentedEquivalent(const MultiTaskParams &params);

/// [x; r; p] for feeding an augmented tower.
Vector ConcatInput(std::span<const double> x, const CellState &other_prev);

}  // namespace mtrnet

#endif  // MTRNET_MULTITASK_CELL_H_
