// include/mtrnet/trainer.h

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

#ifndef MTRNET_TRAINER_H_
#define MTRNET_TRAINER_H_

#include <functional>
#include <span>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtrnet/network.h"

namespace mtrnet {

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double clip_norm = 5.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  std::uint64_t seed = 1;
  /// Whenever the holdout loss fails to improve on the best so far, the
  /// epoch is rolled back and the learning rate halved.
  bool lr_halving = true;

  void Validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double asr_loss = 0.0;
  double lr_loss = 0.0;
  double holdout_loss = 0.0;  // NaN when no holdout set was given
  double wall_seconds = 0.0;
  /// False when the epoch was rolled back by learning-rate halving.
  bool accepted = true;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  bool diverged = false;
};

/// One line per epoch of space-separated key=value pairs. Wall time is left
/// out when `with_wall_time` is false so logs can be compared byte for byte.
void WriteTrainLog(std::ostream &os, const TrainLog &log, bool with_wall_time = true);
TrainLog ReadTrainLog(std::istream &is);

/// Global L2 norm over every tensor.
double GlobalNorm(const MultiTaskParams &grads);

/// Clips `grads` to `cfg.clip_norm` (global norm), then
/// velocity <- momentum * velocity - lr * g; params <- params + velocity.
/// Returns the pre-clip norm. Throws, naming the tensor, on a non-finite
/// gradient.
double SgdStep(MultiTaskParams &params, const MultiTaskParams &grads, MultiTaskParams &velocity,
               const TrainConfig &cfg);

struct BatchGrad {
  double loss = 0.0;
  double asr_loss = 0.0;
  double lr_loss = 0.0;
  MultiTaskParams grads;
};

/// Mean loss and gradient over `corpus.utterances[indices]`. Utterances are
/// processed in parallel; results are summed in index order, so the output
/// is bit-identical to BatchGradientSerial.
BatchGrad BatchGradient(const Model &model, const std::vector<Utterance> &utts,
                        std::span<const std::size_t> indices);
BatchGrad BatchGradientSerial(const Model &model, const std::vector<Utterance> &utts,
                              std::span<const std::size_t> indices);

/// Mean loss over a corpus, forward only.
double MeanLoss(const Model &model, const std::vector<Utterance> &utts);

struct TrainResult {
  Model model;  // last good parameters when training diverged
  TrainLog log;
};

/// Minibatch SGD. Utterance order is reshuffled every epoch from cfg.seed.
/// `holdout` may be empty, which disables learning-rate halving. With
/// halving on, the returned model is the one with the best holdout loss.
TrainResult Train(const Model &init, const std::vector<Utterance> &train,
                  const std::vector<Utterance> &holdout, const TrainConfig &cfg,
                  const std::function<void(const EpochRecord &)> &on_epoch = {});

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  bool pass = true;
};

/// |a - n| / max(|a|, |n|, 1e-12), the relative error used by GradCheck.
double RelativeError(double analytic, double numeric);

/// Compares every component of the LossAndGrad gradient to central
/// differences of Loss. `tamper`, if set, is applied to the analytic
/// gradients first (used to confirm the check catches faults).
GradCheckReport GradCheck(const Model &model, const Utterance &utt, double eps, double tol,
                          const std::function<void(MultiTaskParams &)> &tamper = {});

/// Gradient check of a bare LSTMP tower over a frame sequence with the
/// linear loss sum_t <readout_t, y_t>, zero initial state.
GradCheckReport GradCheckCell(const LstmpParams &params, const std::vector<Vector> &frames,
                              const std::vector<Vector> &readout, double eps, double tol);

}  // namespace mtrnet

#endif  // MTRNET_TRAINER_H_
