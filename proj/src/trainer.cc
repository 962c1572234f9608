// src/trainer.cc

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

#include "mtrnet/trainer.h"

#include "mtrnet/reference.h"

#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace mtrnet {

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw Error("TrainConfig: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("TrainConfig: momentum must lie in [0,1)");
  if (!(clip_norm > 0.0)) throw Error("TrainConfig: clip_norm must be > 0");
  if (batch_size < 1) throw Error("TrainConfig: batch_size must be >= 1");
}

namespace {

using TensorRefs = std::vector<std::pair<std::string, std::span<double>>>;
using ConstTensorRefs = std::vector<std::pair<std::string, std::span<const double>>>;

TensorRefs Tensors(MultiTaskParams &p) {
  TensorRefs out;
  p.ForEachTensor([&](const std::string &n, std::span<double> t) { out.emplace_back(n, t); });
  return out;
}

ConstTensorRefs Tensors(const MultiTaskParams &p) {
  ConstTensorRefs out;
  p.ForEachTensor([&](const std::string &n, std::span<const double> t) { out.emplace_back(n, t); });
  return out;
}

void AddInto(MultiTaskParams &acc, const MultiTaskParams &g) {
  auto a = Tensors(acc);
  auto b = Tensors(g);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a[k].second.size(); ++j) a[k].second[j] += b[k].second[j];
}

void Scale(MultiTaskParams &p, double s) {
  for (auto &[name, t] : Tensors(p))
    for (double &v : t) v *= s;
}

std::string FormatValue(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double GlobalNorm(const MultiTaskParams &grads) {
  double sum = 0.0;
  for (const auto &[name, t] : Tensors(grads))
    for (double v : t) sum += v * v;
  return std::sqrt(sum);
}

double SgdStep(MultiTaskParams &params, const MultiTaskParams &grads, MultiTaskParams &velocity,
               const TrainConfig &cfg) {
  auto p = Tensors(params);
  auto g = Tensors(grads);
  auto v = Tensors(velocity);
  if (p.size() != g.size() || p.size() != v.size())
    throw Error("SgdStep: parameter, gradient and velocity layouts differ");
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k].second.size() != g[k].second.size() || p[k].second.size() != v[k].second.size())
      throw Error("SgdStep: shape mismatch in tensor " + p[k].first);

  const double norm = GlobalNorm(grads);
  if (!std::isfinite(norm)) {
    for (const auto &[name, t] : g)
      for (double x : t)
        if (!std::isfinite(x)) throw Error("SgdStep: non-finite gradient in tensor " + name);
    throw Error("SgdStep: gradient norm overflowed");
  }
  const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto &pt = p[k].second;
    auto &vt = v[k].second;
    const auto &gt = g[k].second;
    for (std::size_t j = 0; j < pt.size(); ++j) {
      vt[j] = cfg.momentum * vt[j] - cfg.learning_rate * (gt[j] * scale);
      pt[j] += vt[j];
    }
  }
  return norm;
}

BatchGrad BatchGradientSerial(const Model &model, const std::vector<Utterance> &utts,
                              std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error("BatchGradient: empty batch");
  BatchGrad out;
  out.grads = model.params.ZerosLike();
  for (std::size_t idx : indices) {
    LossGrad lg = LossAndGrad(model, utts.at(idx));
    out.loss += lg.loss;
    out.asr_loss += lg.asr_loss;
    out.lr_loss += lg.lr_loss;
    AddInto(out.grads, lg.grads);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  out.loss *= inv;
  out.asr_loss *= inv;
  out.lr_loss *= inv;
  Scale(out.grads, inv);
  return out;
}

BatchGrad BatchGradient(const Model &model, const std::vector<Utterance> &utts,
                        std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error("BatchGradient: empty batch");
  for (std::size_t idx : indices)
    if (idx >= utts.size()) throw Error("BatchGradient: utterance index out of range");
  const std::ptrdiff_t B = static_cast<std::ptrdiff_t>(indices.size());
  std::vector<LossGrad> parts(indices.size());
  std::vector<std::string> failures(indices.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < B; ++b) {
    try {
      parts[b] = LossAndGrad(model, utts[indices[b]]);
    } catch (const std::exception &e) {
      failures[b] = e.what();
    }
  }
  for (const auto &f : failures)
    if (!f.empty()) throw Error(f);

  // Fixed-order reduction, identical to the serial path.
  BatchGrad out;
  out.grads = model.params.ZerosLike();
  for (const LossGrad &lg : parts) {
    out.loss += lg.loss;
    out.asr_loss += lg.asr_loss;
    out.lr_loss += lg.lr_loss;
    AddInto(out.grads, lg.grads);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  out.loss *= inv;
  out.asr_loss *= inv;
  out.lr_loss *= inv;
  Scale(out.grads, inv);
  return out;
}

double MeanLoss(const Model &model, const std::vector<Utterance> &utts) {
  if (utts.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(utts.size());
  std::vector<double> losses(utts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t n = 0; n < N; ++n) losses[n] = Loss(model, utts[n]);
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(utts.size());
}

TrainResult Train(const Model &init, const std::vector<Utterance> &train,
                  const std::vector<Utterance> &holdout, const TrainConfig &cfg,
                  const std::function<void(const EpochRecord &)> &on_epoch) {
  cfg.Validate();
  TrainResult res{init, {}};
  if (cfg.epochs == 0) return res;
  if (train.empty()) throw Error("Train: empty training corpus");

  Model &model = res.model;
  MultiTaskParams velocity = model.params.ZerosLike();
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  double lr = cfg.learning_rate;
  double best_holdout = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const MultiTaskParams last_good = model.params;
    const MultiTaskParams last_velocity = velocity;

    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.Index(k)]);

    TrainConfig step_cfg = cfg;
    step_cfg.learning_rate = lr;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    std::size_t batches = 0;
    bool diverged = false;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      BatchGrad bg = BatchGradient(model, train, std::span(order).subspan(start, len));
      if (!std::isfinite(bg.loss) || !std::isfinite(GlobalNorm(bg.grads))) {
        diverged = true;
        break;
      }
      SgdStep(model.params, bg.grads, velocity, step_cfg);
      rec.train_loss += bg.loss;
      rec.asr_loss += bg.asr_loss;
      rec.lr_loss += bg.lr_loss;
      ++batches;
    }
    if (diverged) {
      model.params = last_good;
      velocity = last_velocity;
      res.log.diverged = true;
      break;
    }
    rec.train_loss /= static_cast<double>(batches);
    rec.asr_loss /= static_cast<double>(batches);
    rec.lr_loss /= static_cast<double>(batches);
    rec.holdout_loss = MeanLoss(model, holdout);
    if (!holdout.empty() && !std::isfinite(rec.holdout_loss)) {
      model.params = last_good;
      res.log.diverged = true;
      break;
    }
    if (cfg.lr_halving && !holdout.empty()) {
      if (rec.holdout_loss < best_holdout) {
        best_holdout = rec.holdout_loss;
      } else {
        // Reject the epoch: back to the parameters that scored best_holdout,
        // and drop the momentum that led away from them.
        model.params = last_good;
        velocity = model.params.ZerosLike();
        rec.accepted = false;
        lr *= 0.5;
      }
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return res;
}

void WriteTrainLog(std::ostream &os, const TrainLog &log, bool with_wall_time) {
  for (const EpochRecord &r : log.epochs) {
    os << "epoch=" << r.epoch << " lr=" << FormatValue(r.learning_rate)
       << " train_loss=" << FormatValue(r.train_loss) << " asr_loss=" << FormatValue(r.asr_loss)
       << " lr_loss=" << FormatValue(r.lr_loss) << " holdout_loss=" << FormatValue(r.holdout_loss)
       << " accepted=" << (r.accepted ? 1 : 0);
    if (with_wall_time) os << " wall_seconds=" << FormatValue(r.wall_seconds);
    os << '\n';
  }
  if (log.diverged) os << "status=diverged\n";
}

TrainLog ReadTrainLog(std::istream &is) {
  TrainLog log;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    std::string kv;
    EpochRecord r;
    bool any = false;
    while (ls >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("train log: malformed field '" + kv + "'");
      std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "status") {
        log.diverged = val == "diverged";
        continue;
      }
      any = true;
      double d = val == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(val);
      if (key == "epoch") r.epoch = static_cast<std::size_t>(d);
      else if (key == "lr") r.learning_rate = d;
      else if (key == "train_loss") r.train_loss = d;
      else if (key == "asr_loss") r.asr_loss = d;
      else if (key == "lr_loss") r.lr_loss = d;
      else if (key == "holdout_loss") r.holdout_loss = d;
      else if (key == "wall_seconds") r.wall_seconds = d;
      else if (key == "accepted") r.accepted = d != 0.0;
      else throw Error("train log: unknown key '" + key + "'");
    }
    if (any) log.epochs.push_back(r);
  }
  return log;
}

double RelativeError(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport GradCheck(const Model &model, const Utterance &utt, double eps, double tol,
                          const std::function<void(MultiTaskParams &)> &tamper) {
  LossGrad lg = LossAndGrad(model, utt);
  if (tamper) tamper(lg.grads);
  const auto analytic = Tensors(std::as_const(lg.grads));

  // The objective is evaluated in extended precision relative to its value at
  // the unperturbed point, so rounding in the loss does not swamp the
  // difference quotient for small gradient components.
  Model work = model;
  const long double base = ReferenceLoss<long double>(model, utt);
  auto params = Tensors(work.params);
  GradCheckReport rep;
  for (std::size_t k = 0; k < params.size(); ++k) {
    std::span<double> t = params[k].second;
    std::vector<double> theta(t.begin(), t.end());
    auto f = [&](std::span<const double> th) {
      std::copy(th.begin(), th.end(), t.begin());
      return static_cast<double>(ReferenceLoss<long double>(work, utt) - base);
    };
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double numeric = CentralDiff(f, theta, j, eps);
      std::copy(theta.begin(), theta.end(), t.begin());
      const double a = analytic[k].second[j];
      const double err = RelativeError(a, numeric);
      ++rep.checked;
      if (err > rep.max_rel_error || rep.checked == 1) {
        rep.max_rel_error = err;
        rep.worst_tensor = params[k].first;
        rep.worst_index = j;
        rep.worst_analytic = a;
        rep.worst_numeric = numeric;
      }
    }
  }
  rep.pass = rep.max_rel_error < tol;
  return rep;
}

GradCheckReport GradCheckCell(const LstmpParams &params, const std::vector<Vector> &frames,
                              const std::vector<Vector> &readout, double eps, double tol) {
  if (frames.size() != readout.size()) throw Error("GradCheckCell: one readout per frame");
  std::vector<StepCache> caches;
  CellState s = CellState::Zeros(params.dims);
  for (const Vector &x : frames) {
    StepOutput o = StepForward(params, x, s);
    caches.push_back(std::move(o.cache));
    s = std::move(o.state);
  }
  LstmpParams grads = LstmpParams::Zeros(params.dims);
  StateGrad dnext = StateGrad::Zeros(params.dims);
  for (std::size_t t = frames.size(); t-- > 0;)
    dnext = StepBackward(params, caches[t], readout[t], dnext, grads).dprev;

  std::vector<std::pair<std::string, std::span<const double>>> analytic;
  grads.ForEachTensor([&](const char *n, std::span<const double> t) { analytic.emplace_back(n, t); });
  LstmpParams work = params;
  const long double base = ReferenceCellLoss<long double>(params, frames, readout);
  std::vector<std::pair<std::string, std::span<double>>> tensors;
  work.ForEachTensor([&](const char *n, std::span<double> t) { tensors.emplace_back(n, t); });

  GradCheckReport rep;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    std::span<double> t = tensors[k].second;
    std::vector<double> theta(t.begin(), t.end());
    auto f = [&](std::span<const double> th) {
      std::copy(th.begin(), th.end(), t.begin());
      return static_cast<double>(ReferenceCellLoss<long double>(work, frames, readout) - base);
    };
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double numeric = CentralDiff(f, theta, j, eps);
      std::copy(theta.begin(), theta.end(), t.begin());
      const double a = analytic[k].second[j];
      const double err = RelativeError(a, numeric);
      ++rep.checked;
      if (err > rep.max_rel_error || rep.checked == 1) {
        rep.max_rel_error = err;
        rep.worst_tensor = tensors[k].first;
        rep.worst_index = j;
        rep.worst_analytic = a;
        rep.worst_numeric = numeric;
      }
    }
  }
  rep.pass = rep.max_rel_error < tol;
  return rep;
}

}  // namespace mtrnet
