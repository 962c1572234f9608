// src/reference.cc

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

#include "mtrnet/reference.h"

#include <cmath>

namespace mtrnet {

namespace {

template <class Real>
using Vec = std::vector<Real>;

template <class Real>
struct RefState {
  Vec<Real> c, r, p;
};

template <class Real>
RefState<Real> ZeroState(const CellDims &d) {
  return {Vec<Real>(d.cell_dim, 0), Vec<Real>(d.rproj_dim, 0), Vec<Real>(d.pproj_dim, 0)};
}

template <class Real>
Real Dot(std::span<const double> w, const Vec<Real> &x) {
  Real s = 0;
  for (std::size_t k = 0; k < x.size(); ++k) s += static_cast<Real>(w[k]) * x[k];
  return s;
}

template <class Real>
Real Sig(Real z) {
  return Real(1) / (Real(1) + std::exp(-z));
}

// extra[g][k]: additive term on gate g pre-activation (empty = none).
template <class Real>
RefState<Real> Step(const LstmpParams &p, const Vec<Real> &x, const RefState<Real> &prev,
                    const std::array<Vec<Real>, kNumGates> &extra, Vec<Real> &y) {
  const CellDims &d = p.dims;
  RefState<Real> s = ZeroState<Real>(d);
  Vec<Real> m(d.cell_dim);
  for (std::size_t k = 0; k < d.cell_dim; ++k) {
    Real a[kNumGates];
    for (int g = 0; g < kNumGates; ++g) {
      a[g] = Dot(p.w_x[g].row(k), x) + Dot(p.w_r[g].row(k), prev.r) + static_cast<Real>(p.b[g][k]);
      if (!extra[g].empty()) a[g] += extra[g][k];
    }
    const Real c_prev = prev.c[k];
    const Real i = Sig(a[kGateI] + static_cast<Real>(p.w_ic[k]) * c_prev);
    const Real f = Sig(a[kGateF] + static_cast<Real>(p.w_fc[k]) * c_prev);
    const Real c = f * c_prev + i * std::tanh(a[kGateG]);
    const Real o = Sig(a[kGateO] + static_cast<Real>(p.w_oc[k]) * c);
    s.c[k] = c;
    m[k] = o * std::tanh(c);
  }
  for (std::size_t j = 0; j < d.rproj_dim; ++j) s.r[j] = Dot(p.w_rm.row(j), m);
  for (std::size_t j = 0; j < d.pproj_dim; ++j) s.p[j] = Dot(p.w_pm.row(j), m);
  y.assign(d.output_dim, 0);
  for (std::size_t j = 0; j < d.output_dim; ++j)
    y[j] = Dot(p.w_yr.row(j), s.r) + Dot(p.w_yp.row(j), s.p) + static_cast<Real>(p.b_y[j]);
  return s;
}

template <class Real>
std::array<Vec<Real>, kNumGates> Cross(const MultiTaskParams &p, int dir,
                                       const RefState<Real> &other, std::size_t cells) {
  std::array<Vec<Real>, kNumGates> out;
  for (int g = 0; g < kNumGates; ++g) {
    if (!p.config.targets[g]) continue;
    out[g].assign(cells, 0);
    for (int s = 0; s < kNumInfo; ++s) {
      if (!p.config.info[s]) continue;
      const Matrix &w = p.cross.w[dir][g][s];
      const Vec<Real> &src = s == kInfoR ? other.r : other.p;
      for (std::size_t k = 0; k < cells; ++k) out[g][k] += Dot(w.row(k), src);
    }
  }
  return out;
}

template <class Real>
Vec<Real> SoftmaxRef(const Vec<Real> &y) {
  Real mx = y[0];
  for (Real v : y) mx = std::max(mx, v);
  Vec<Real> out(y.size());
  Real sum = 0;
  for (std::size_t k = 0; k < y.size(); ++k) sum += (out[k] = std::exp(y[k] - mx));
  for (Real &v : out) v /= sum;
  return out;
}

template <class Real>
Vec<Real> ToReal(const Vector &v) {
  return Vec<Real>(v.begin(), v.end());
}

template <class Real>
void RunForward(const Model &model, const Utterance &utt, std::vector<Vec<Real>> &phone,
                std::vector<Vec<Real>> &lang) {
  const MultiTaskParams &p = model.params;
  const bool mt = model.spec.mode == Mode::kMultitask;
  RefState<Real> sa = ZeroState<Real>(p.tower_a.dims);
  RefState<Real> sl = mt ? ZeroState<Real>(p.tower_l.dims) : RefState<Real>{};
  for (const Vector &frame : utt.frames) {
    CheckDim(frame.size(), p.tower_a.dims.input_dim, "feature frame");
    const Vec<Real> x = ToReal<Real>(frame);
    Vec<Real> ya, yl;
    if (mt) {
      auto into_a = Cross(p, kIntoA, sl, p.tower_a.dims.cell_dim);
      auto into_l = Cross(p, kIntoL, sa, p.tower_l.dims.cell_dim);
      RefState<Real> na = Step(p.tower_a, x, sa, into_a, ya);
      RefState<Real> nl = Step(p.tower_l, x, sl, into_l, yl);
      sa = std::move(na);
      sl = std::move(nl);
      lang.push_back(SoftmaxRef(yl));
    } else {
      sa = Step(p.tower_a, x, sa, {}, ya);
    }
    phone.push_back(SoftmaxRef(ya));
  }
}

}  // namespace

template <class Real>
Real ReferenceLoss(const Model &model, const Utterance &utt) {
  if (utt.frames.empty()) throw Error("ReferenceLoss: empty utterance");
  std::vector<Vec<Real>> phone, lang;
  RunForward<Real>(model, utt, phone, lang);
  const std::size_t T = utt.frames.size();
  Real asr = 0, lr = 0;
  for (std::size_t t = 0; t < T; ++t) {
    asr -= std::log(phone[t][utt.phones[AlignedFrame(t, model.spec.target_delay)]]);
    if (!lang.empty()) lr -= std::log(lang[t][utt.language]);
  }
  Real loss = static_cast<Real>(model.spec.lambda_asr) * (asr / static_cast<Real>(T));
  if (model.spec.mode == Mode::kMultitask)
    loss += static_cast<Real>(model.spec.lambda_lr) * (lr / static_cast<Real>(T));
  return loss;
}

template <class Real>
Real ReferenceCellLoss(const LstmpParams &params, const std::vector<Vector> &frames,
                       const std::vector<Vector> &readout) {
  RefState<Real> s = ZeroState<Real>(params.dims);
  Real loss = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    Vec<Real> y;
    s = Step(params, ToReal<Real>(frames[t]), s, {}, y);
    for (std::size_t k = 0; k < y.size(); ++k) loss += static_cast<Real>(readout[t][k]) * y[k];
  }
  return loss;
}

std::pair<std::vector<Vector>, std::vector<Vector>> ReferencePosteriors(const Model &model,
                                                                       const Utterance &utt) {
  std::vector<Vec<double>> phone, lang;
  RunForward<double>(model, utt, phone, lang);
  std::pair<std::vector<Vector>, std::vector<Vector>> out;
  for (auto &v : phone) out.first.emplace_back(std::move(v));
  for (auto &v : lang) out.second.emplace_back(std::move(v));
  return out;
}

template double ReferenceLoss<double>(const Model &, const Utterance &);
template long double ReferenceLoss<long double>(const Model &, const Utterance &);
template double ReferenceCellLoss<double>(const LstmpParams &, const std::vector<Vector> &,
                                          const std::vector<Vector> &);
template long double ReferenceCellLoss<long double>(const LstmpParams &,
                                                    const std::vector<Vector> &,
                                                    const std::vector<Vector> &);

}  // namespace mtrnet
