// src/lstmp_cell.cc

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

#include "mtrnet/lstmp_cell.h"

#include <sstream>

namespace mtrnet {

void CellDims::Validate() const {
  if (input_dim < 1 || cell_dim < 1 || rproj_dim < 1 || pproj_dim < 1 || output_dim < 1) {
    std::ostringstream os;
    os << "CellDims: all dimensions must be >= 1 (input " << input_dim << ", cell "
       << cell_dim << ", rproj " << rproj_dim << ", pproj " << pproj_dim << ", output "
       << output_dim << ")";
    throw Error(os.str());
  }
}

LstmpParams LstmpParams::Zeros(const CellDims &d) {
  LstmpParams p;
  p.dims = d;
  for (int g = 0; g < kNumGates; ++g) {
    p.w_x[g] = Matrix(d.cell_dim, d.input_dim);
    p.w_r[g] = Matrix(d.cell_dim, d.rproj_dim);
    p.b[g] = Vector(d.cell_dim);
  }
  p.w_ic = Vector(d.cell_dim);
  p.w_fc = Vector(d.cell_dim);
  p.w_oc = Vector(d.cell_dim);
  p.w_rm = Matrix(d.rproj_dim, d.cell_dim);
  p.w_pm = Matrix(d.pproj_dim, d.cell_dim);
  p.w_yr = Matrix(d.output_dim, d.rproj_dim);
  p.w_yp = Matrix(d.output_dim, d.pproj_dim);
  p.b_y = Vector(d.output_dim);
  return p;
}

std::size_t LstmpParams::NumParams() const {
  std::size_t n = 0;
  ForEachTensor([&](const char *, std::span<const double> t) { n += t.size(); });
  return n;
}

CellState CellState::Zeros(const CellDims &d) {
  return {Vector(d.cell_dim), Vector(d.rproj_dim), Vector(d.pproj_dim)};
}

StateGrad StateGrad::Zeros(const CellDims &d) {
  return {Vector(d.cell_dim), Vector(d.rproj_dim), Vector(d.pproj_dim)};
}

void CheckShapes(const LstmpParams &p) {
  const CellDims &d = p.dims;
  auto mat = [](const Matrix &m, std::size_t r, std::size_t c, const char *name) {
    if (m.rows() != r || m.cols() != c) {
      std::ostringstream os;
      os << "LstmpParams: " << name << " is " << m.rows() << "x" << m.cols()
         << ", expected " << r << "x" << c;
      throw Error(os.str());
    }
  };
  for (int g = 0; g < kNumGates; ++g) {
    mat(p.w_x[g], d.cell_dim, d.input_dim, "W_.x");
    mat(p.w_r[g], d.cell_dim, d.rproj_dim, "W_.r");
    CheckDim(p.b[g].size(), d.cell_dim, "gate bias");
  }
  CheckDim(p.w_ic.size(), d.cell_dim, "w_ic");
  CheckDim(p.w_fc.size(), d.cell_dim, "w_fc");
  CheckDim(p.w_oc.size(), d.cell_dim, "w_oc");
  mat(p.w_rm, d.rproj_dim, d.cell_dim, "W_rm");
  mat(p.w_pm, d.pproj_dim, d.cell_dim, "W_pm");
  mat(p.w_yr, d.output_dim, d.rproj_dim, "W_yr");
  mat(p.w_yp, d.output_dim, d.pproj_dim, "W_yp");
  CheckDim(p.b_y.size(), d.output_dim, "b_y");
}

LstmpParams InitParams(const CellDims &dims, Rng &rng, double scale, double forget_bias) {
  dims.Validate();
  if (scale < 0.0) throw Error("InitParams: scale must be non-negative");
  LstmpParams p = LstmpParams::Zeros(dims);
  p.ForEachTensor([&](const char *name, std::span<double> t) {
    if (std::string_view(name) == "b_f") return;
    for (double &v : t) v = rng.Uniform(-scale, scale);
  });
  std::fill(p.b[kGateF].begin(), p.b[kGateF].end(), forget_bias);
  return p;
}

StepOutput StepForward(const LstmpParams &p, std::span<const double> x,
                       const CellState &prev, const GateInjection *inject) {
  const CellDims &d = p.dims;
  CheckDim(x.size(), d.input_dim, "x_t");
  CheckDim(prev.c.size(), d.cell_dim, "c_{t-1}");
  CheckDim(prev.r.size(), d.rproj_dim, "r_{t-1}");
  const std::size_t n = d.cell_dim;

  // Pre-activations: W_kx x + W_kr r_{t-1} + b_k (+ injection).
  std::array<Vector, kNumGates> pre;
  for (int g = 0; g < kNumGates; ++g) {
    pre[g] = p.b[g];
    GemvAcc(p.w_x[g], x, pre[g].span());
    GemvAcc(p.w_r[g], prev.r, pre[g].span());
    if (inject && !inject->add[g].empty()) {
      CheckDim(inject->add[g].size(), n, "gate injection");
      for (std::size_t k = 0; k < n; ++k) pre[g][k] += inject->add[g][k];
    }
  }

  StepOutput out;
  StepCache &cc = out.cache;
  cc.x = Vector(std::vector<double>(x.begin(), x.end()));
  cc.c_prev = prev.c;
  cc.r_prev = prev.r;
  cc.i = Vector(n);
  cc.f = Vector(n);
  cc.o = Vector(n);
  cc.g = Vector(n);
  cc.c = Vector(n);
  cc.tanh_c = Vector(n);
  cc.m = Vector(n);
  for (std::size_t k = 0; k < n; ++k) {
    cc.i[k] = Sigmoid(pre[kGateI][k] + p.w_ic[k] * prev.c[k]);
    cc.f[k] = Sigmoid(pre[kGateF][k] + p.w_fc[k] * prev.c[k]);
    cc.g[k] = std::tanh(pre[kGateG][k]);
    cc.c[k] = cc.f[k] * prev.c[k] + cc.i[k] * cc.g[k];
    // The output gate peeks at the updated cell.
    cc.o[k] = Sigmoid(pre[kGateO][k] + p.w_oc[k] * cc.c[k]);
    cc.tanh_c[k] = std::tanh(cc.c[k]);
    cc.m[k] = cc.o[k] * cc.tanh_c[k];
  }
  cc.g_pre = std::move(pre[kGateG]);

  cc.r = Vector(d.rproj_dim);
  cc.p = Vector(d.pproj_dim);
  GemvAcc(p.w_rm, cc.m, cc.r.span());
  GemvAcc(p.w_pm, cc.m, cc.p.span());

  out.y = p.b_y;
  GemvAcc(p.w_yr, cc.r, out.y.span());
  GemvAcc(p.w_yp, cc.p, out.y.span());

  out.state = {cc.c, cc.r, cc.p};
  return out;
}

StepBackwardOutput StepBackward(const LstmpParams &p, const StepCache &cc,
                                std::span<const double> dy, const StateGrad &dnext,
                                LstmpParams &grads) {
  const CellDims &d = p.dims;
  CheckDim(dy.size(), d.output_dim, "dy");
  CheckDim(dnext.dc.size(), d.cell_dim, "dc_next");
  CheckDim(dnext.dr.size(), d.rproj_dim, "dr_next");
  CheckDim(dnext.dp.size(), d.pproj_dim, "dp_next");
  CheckDim(cc.m.size(), d.cell_dim, "cache");
  if (!(grads.dims == d)) throw Error("StepBackward: gradient buffer has different dims");
  const std::size_t n = d.cell_dim;

  // Output layer.
  Vector dr = dnext.dr, dp = dnext.dp;
  GemvTAcc(p.w_yr, dy, dr.span());
  GemvTAcc(p.w_yp, dy, dp.span());
  OuterAcc(dy, cc.r, grads.w_yr);
  OuterAcc(dy, cc.p, grads.w_yp);
  for (std::size_t k = 0; k < d.output_dim; ++k) grads.b_y[k] += dy[k];

  // Projections.
  Vector dm(n);
  GemvTAcc(p.w_rm, dr, dm.span());
  GemvTAcc(p.w_pm, dp, dm.span());
  OuterAcc(dr, cc.m, grads.w_rm);
  OuterAcc(dp, cc.m, grads.w_pm);

  StepBackwardOutput out;
  for (auto &v : out.dpre) v = Vector(n);
  Vector &da_i = out.dpre[kGateI], &da_f = out.dpre[kGateF];
  Vector &da_o = out.dpre[kGateO], &da_g = out.dpre[kGateG];
  Vector dc_prev(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double o = cc.o[k], tc = cc.tanh_c[k];
    da_o[k] = dm[k] * tc * o * (1.0 - o);
    double dc = dnext.dc[k] + dm[k] * o * (1.0 - tc * tc) + da_o[k] * p.w_oc[k];
    grads.w_oc[k] += da_o[k] * cc.c[k];

    const double i = cc.i[k], f = cc.f[k], g = cc.g[k];
    da_i[k] = dc * g * i * (1.0 - i);
    da_f[k] = dc * cc.c_prev[k] * f * (1.0 - f);
    da_g[k] = dc * i * (1.0 - g * g);
    dc_prev[k] = dc * f + da_i[k] * p.w_ic[k] + da_f[k] * p.w_fc[k];
    grads.w_ic[k] += da_i[k] * cc.c_prev[k];
    grads.w_fc[k] += da_f[k] * cc.c_prev[k];
  }

  out.dx = Vector(d.input_dim);
  out.dprev.dc = std::move(dc_prev);
  out.dprev.dr = Vector(d.rproj_dim);
  out.dprev.dp = Vector(d.pproj_dim);  // p_{t-1} does not feed this tower
  for (int g = 0; g < kNumGates; ++g) {
    const Vector &da = out.dpre[g];
    OuterAcc(da, cc.x, grads.w_x[g]);
    OuterAcc(da, cc.r_prev, grads.w_r[g]);
    for (std::size_t k = 0; k < n; ++k) grads.b[g][k] += da[k];
    GemvTAcc(p.w_x[g], da, out.dx.span());
    GemvTAcc(p.w_r[g], da, out.dprev.dr.span());
  }
  return out;
}

std::pair<LstmpParams, StepBackwardOutput> StepBackward(
    const LstmpParams &params, const StepCache &cache, std::span<const double> dy,
    const StateGrad &dnext) {
  LstmpParams grads = LstmpParams::Zeros(params.dims);
  StepBackwardOutput out = StepBackward(params, cache, dy, dnext, grads);
  return {std::move(grads), std::move(out)};
}

}  // namespace mtrnet
