// src/multitask_cell.cc

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

#include "mtrnet/multitask_cell.h"

#include <sstream>

namespace mtrnet {

bool FeedbackConfig::AnyTarget() const {
  for (bool t : targets)
    if (t) return true;
  return false;
}

bool FeedbackConfig::Full() const {
  for (bool t : targets)
    if (!t) return false;
  return info[kInfoR] && info[kInfoP];
}

std::size_t FeedbackConfig::NumLinksPerDirection() const {
  std::size_t n = 0;
  for (int g = 0; g < kNumGates; ++g)
    for (int s = 0; s < kNumInfo; ++s) n += Enabled(g, s);
  return n;
}

void FeedbackConfig::Validate() const {
  if (AnyTarget() && !info[kInfoR] && !info[kInfoP])
    throw Error("FeedbackConfig: feedback targets given without any feedback info (r, p)");
}

std::string FeedbackConfig::Label() const {
  std::string s;
  for (int g = 0; g < kNumGates; ++g)
    if (targets[g]) s += kGateLetters[g];
  if (s.empty()) return "none";
  s += ':';
  if (info[kInfoR]) s += 'r';
  if (info[kInfoR] && info[kInfoP]) s += ',';
  if (info[kInfoP]) s += 'p';
  return s;
}

FeedbackConfig FeedbackConfig::Parse(const std::string &label) {
  FeedbackConfig cfg;
  if (label == "none") return cfg;
  auto colon = label.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == label.size())
    throw Error("feedback config '" + label + "': expected <targets>:<info>, e.g. g:r,p");
  for (char c : label.substr(0, colon)) {
    int g = -1;
    for (int k = 0; k < kNumGates; ++k)
      if (kGateLetters[k] == c) g = k;
    if (g < 0 || cfg.targets[g])
      throw Error("feedback config '" + label + "': bad target letter '" + c + "'");
    cfg.targets[g] = true;
  }
  std::stringstream ss(label.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "r" && !cfg.info[kInfoR]) {
      cfg.info[kInfoR] = true;
    } else if (item == "p" && !cfg.info[kInfoP]) {
      cfg.info[kInfoP] = true;
    } else {
      throw Error("feedback config '" + label + "': bad info item '" + item + "'");
    }
  }
  cfg.Validate();
  return cfg;
}

std::size_t CrossLinks::Count() const {
  std::size_t n = 0;
  for (const auto &dir : w)
    for (const auto &gate : dir)
      for (const auto &m : gate) n += !m.empty();
  return n;
}

namespace {

std::size_t ProjDim(const CellDims &d, int info) {
  return info == kInfoR ? d.rproj_dim : d.pproj_dim;
}

const Vector &ProjOf(const CellState &s, int info) { return info == kInfoR ? s.r : s.p; }
Vector &ProjOf(StateGrad &s, int info) { return info == kInfoR ? s.dr : s.dp; }

CrossLinks ZeroCross(const FeedbackConfig &cfg, const CellDims &da, const CellDims &dl) {
  CrossLinks x;
  for (int g = 0; g < kNumGates; ++g)
    for (int s = 0; s < kNumInfo; ++s) {
      if (!cfg.Enabled(g, s)) continue;
      x.w[kIntoA][g][s] = Matrix(da.cell_dim, ProjDim(dl, s));
      x.w[kIntoL][g][s] = Matrix(dl.cell_dim, ProjDim(da, s));
    }
  return x;
}

// Sum over enabled info sources of W[dir][g][s] * other.s, per gate.
GateInjection CrossInjection(const MultiTaskParams &p, int dir, const CellState &other) {
  const std::size_t n = dir == kIntoA ? p.tower_a.dims.cell_dim : p.tower_l.dims.cell_dim;
  GateInjection inj;
  for (int g = 0; g < kNumGates; ++g) {
    if (!p.config.targets[g]) continue;
    inj.add[g] = Vector(n);
    for (int s = 0; s < kNumInfo; ++s)
      if (p.config.info[s]) GemvAcc(p.cross.w[dir][g][s], ProjOf(other, s), inj.add[g].span());
  }
  return inj;
}

}  // namespace

MultiTaskParams MultiTaskParams::ZerosLike() const {
  MultiTaskParams z;
  z.config = config;
  z.tower_a = LstmpParams::Zeros(tower_a.dims);
  if (tower_l.dims.cell_dim > 0) z.tower_l = LstmpParams::Zeros(tower_l.dims);
  z.cross = ZeroCross(config, tower_a.dims, tower_l.dims);
  return z;
}

std::size_t MultiTaskParams::NumParams() const {
  std::size_t n = 0;
  ForEachTensor([&](const std::string &, std::span<const double> t) { n += t.size(); });
  return n;
}

JointState JointState::Zeros(const CellDims &da, const CellDims &dl) {
  return {CellState::Zeros(da), CellState::Zeros(dl)};
}

JointStateGrad JointStateGrad::Zeros(const CellDims &da, const CellDims &dl) {
  return {StateGrad::Zeros(da), StateGrad::Zeros(dl)};
}

MultiTaskParams InitMultitask(const CellDims &dims_a, const CellDims &dims_l,
                              const FeedbackConfig &config, Rng &rng, double scale,
                              double forget_bias) {
  if (dims_a.input_dim != dims_l.input_dim) {
    std::ostringstream os;
    os << "InitMultitask: towers must share the input dimension (ASR " << dims_a.input_dim
       << ", LR " << dims_l.input_dim << ")";
    throw Error(os.str());
  }
  config.Validate();
  MultiTaskParams p;
  p.config = config;
  p.tower_a = InitParams(dims_a, rng, scale, forget_bias);
  p.tower_l = InitParams(dims_l, rng, scale, forget_bias);
  p.cross = ZeroCross(config, dims_a, dims_l);
  for (auto &dir : p.cross.w)
    for (auto &gate : dir)
      for (auto &m : gate)
        for (double &v : m.span()) v = rng.Uniform(-scale, scale);
  return p;
}

MtStepOutput MtStepForward(const MultiTaskParams &p, std::span<const double> x,
                           const JointState &prev) {
  CheckDim(prev.l.r.size(), p.tower_l.dims.rproj_dim, "LR r_{t-1}");
  CheckDim(prev.l.p.size(), p.tower_l.dims.pproj_dim, "LR p_{t-1}");
  CheckDim(prev.a.p.size(), p.tower_a.dims.pproj_dim, "ASR p_{t-1}");

  // Both towers read only t-1 state of the other, so order is immaterial.
  MtStepOutput out;
  StepOutput sa, sl;
  if (p.config.AnyTarget()) {
    GateInjection into_a = CrossInjection(p, kIntoA, prev.l);
    GateInjection into_l = CrossInjection(p, kIntoL, prev.a);
    sa = StepForward(p.tower_a, x, prev.a, &into_a);
    sl = StepForward(p.tower_l, x, prev.l, &into_l);
  } else {
    sa = StepForward(p.tower_a, x, prev.a);
    sl = StepForward(p.tower_l, x, prev.l);
  }
  out.state = {std::move(sa.state), std::move(sl.state)};
  out.y_a = std::move(sa.y);
  out.y_l = std::move(sl.y);
  out.cache.a = std::move(sa.cache);
  out.cache.l = std::move(sl.cache);
  out.cache.r_a_prev = prev.a.r;
  out.cache.p_a_prev = prev.a.p;
  out.cache.r_l_prev = prev.l.r;
  out.cache.p_l_prev = prev.l.p;
  return out;
}

MtStepBackwardOutput MtStepBackward(const MultiTaskParams &p, const MtStepCache &cache,
                                    std::span<const double> dy_a,
                                    std::span<const double> dy_l,
                                    const JointStateGrad &dnext, MultiTaskParams &grads) {
  if (!(grads.config == p.config)) throw Error("MtStepBackward: gradient buffer config differs");
  StepBackwardOutput ba = StepBackward(p.tower_a, cache.a, dy_a, dnext.a, grads.tower_a);
  StepBackwardOutput bl = StepBackward(p.tower_l, cache.l, dy_l, dnext.l, grads.tower_l);

  MtStepBackwardOutput out;
  out.dprev.a = std::move(ba.dprev);
  out.dprev.l = std::move(bl.dprev);

  const CellState a_prev{Vector(), cache.r_a_prev, cache.p_a_prev};
  const CellState l_prev{Vector(), cache.r_l_prev, cache.p_l_prev};
  for (int g = 0; g < kNumGates; ++g)
    for (int s = 0; s < kNumInfo; ++s) {
      if (!p.config.Enabled(g, s)) continue;
      OuterAcc(ba.dpre[g], ProjOf(l_prev, s), grads.cross.w[kIntoA][g][s]);
      GemvTAcc(p.cross.w[kIntoA][g][s], ba.dpre[g], ProjOf(out.dprev.l, s).span());
      OuterAcc(bl.dpre[g], ProjOf(a_prev, s), grads.cross.w[kIntoL][g][s]);
      GemvTAcc(p.cross.w[kIntoL][g][s], bl.dpre[g], ProjOf(out.dprev.a, s).span());
    }

  out.dx = std::move(ba.dx);
  for (std::size_t k = 0; k < out.dx.size(); ++k) out.dx[k] += bl.dx[k];
  return out;
}

namespace {

LstmpParams Augment(const LstmpParams &own, const CellDims &other, const CrossLinks &cross,
                    int dir) {
  CellDims d = own.dims;
  const std::size_t in = d.input_dim;
  d.input_dim = in + other.rproj_dim + other.pproj_dim;
  LstmpParams aug = own;
  aug.dims = d;
  for (int g = 0; g < kNumGates; ++g) {
    Matrix w(d.cell_dim, d.input_dim);
    const Matrix &wr = cross.w[dir][g][kInfoR];
    const Matrix &wp = cross.w[dir][g][kInfoP];
    for (std::size_t row = 0; row < d.cell_dim; ++row) {
      for (std::size_t c = 0; c < in; ++c) w(row, c) = own.w_x[g](row, c);
      for (std::size_t c = 0; c < other.rproj_dim; ++c) w(row, in + c) = wr(row, c);
      for (std::size_t c = 0; c < other.pproj_dim; ++c)
        w(row, in + other.rproj_dim + c) = wp(row, c);
    }
    aug.w_x[g] = std::move(w);
  }
  return aug;
}

}  // namespace

std::pair<LstmpParams, LstmpParams> BuildAugmentedEquivalent(const MultiTaskParams &p) {
  if (!p.config.Full())
    throw Error("BuildAugmentedEquivalent: input augmentation is only equivalent for the full "
                "configuration (info r,p into gates i,f,o,g); got " + p.config.Label());
  return {Augment(p.tower_a, p.tower_l.dims, p.cross, kIntoA),
          Augment(p.tower_l, p.tower_a.dims, p.cross, kIntoL)};
}

Vector ConcatInput(std::span<const double> x, const CellState &other_prev) {
  std::vector<double> v(x.begin(), x.end());
  v.insert(v.end(), other_prev.r.begin(), other_prev.r.end());
  v.insert(v.end(), other_prev.p.begin(), other_prev.p.end());
  return Vector(std::move(v));
}

}  // namespace mtrnet
