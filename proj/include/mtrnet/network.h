// include/mtrnet/network.h

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

#ifndef MTRNET_NETWORK_H_
#define MTRNET_NETWORK_H_

#include <optional>
#include <string>
#include <vector>

#include "mtrnet/multitask_cell.h"
#include "mtrnet/synth_corpus.h"

namespace mtrnet {

enum class Mode { kSingleBilingual, kMultitask };

std::string ModeName(Mode m);
Mode ParseMode(const std::string &s);

struct ModelSpec {
  Mode mode = Mode::kMultitask;
  /// ASR tower; its output_dim is phone_classes.
  CellDims asr;
  /// LR tower (multitask only); its output_dim is language_classes.
  CellDims lr;
  FeedbackConfig feedback;
  std::size_t phone_classes = 0;
  std::size_t language_classes = 2;
  std::size_t target_delay = 5;
  /// Splice context the input features were built with.
  std::size_t splice_context = 2;
  double lambda_asr = 1.0;
  double lambda_lr = 1.0;

  void Validate() const;
  friend bool operator==(const ModelSpec &, const ModelSpec &) = default;
};

/// In single_bilingual mode tower_l is empty and no cross links exist.
struct Model {
  ModelSpec spec;
  MultiTaskParams params;

  friend bool operator==(const Model &, const Model &) = default;
};

/// Builds the model for `spec` with uniform [-scale, scale] weights.
Model InitModel(const ModelSpec &spec, std::uint64_t seed, double scale,
                double forget_bias = 1.0);

struct ForwardRecord {
  std::vector<Vector> phone_post;
  std::vector<Vector> lang_post;  // empty in single_bilingual mode
  std::vector<MtStepCache> caches;
};

/// Index of the phone target scored at output frame t (clamped at the start).
inline std::size_t AlignedFrame(std::size_t t, std::size_t delay) {
  return t >= delay ? t - delay : 0;
}

ForwardRecord ForwardUtterance(const Model &model, const Utterance &utt);

struct LossGrad {
  double loss = 0.0;
  double asr_loss = 0.0;  // mean per-frame CE, before weighting
  double lr_loss = 0.0;
  MultiTaskParams grads;
};

/// lambda_asr * mean CE(phones, delayed targets)
///   + lambda_lr * mean CE(language, utterance label at every frame),
/// with gradients by full-sequence backpropagation through time.
LossGrad LossAndGrad(const Model &model, const Utterance &utt);

/// Forward-only loss, same definition as LossAndGrad.
double Loss(const Model &model, const Utterance &utt);

/// Multiplies each phone probability by the weight of its language and
/// renormalizes.
Vector MaskPosterior(std::span<const double> phone_post, std::span<const double> lang_weight,
                     const PhonePartition &partition);

/// Phone posterior at frame t masked by the running mean of the language
/// posteriors over frames 0..t.
Vector LanguageAwarePosterior(const ForwardRecord &record, std::size_t t,
                              const PhonePartition &partition);

/// Argmax with ties broken by the lowest index.
std::size_t Argmax(std::span<const double> v);

struct MetricsReport {
  std::string label;
  std::vector<double> fer;               // per language
  std::optional<double> lang_accuracy;   // multitask only
  double confusion = 0.0;
  std::vector<double> masked_fer;        // per language, multitask only
  std::size_t frames = 0;
  std::size_t utterances = 0;
};

/// Metrics from precomputed posteriors: per-language frame error rate at
/// the delay-aligned targets, utterance language accuracy (argmax of the mean
/// language posterior), cross-language confusion rate, and FER after
/// LanguageAwarePosterior masking. Argmax ties go to the lowest index.
MetricsReport ScoreRecords(const std::vector<ForwardRecord> &records,
                           const std::vector<Utterance> &utts, std::size_t target_delay,
                           const PhonePartition &partition, const std::string &label = "");

/// Runs the model over the corpus (in parallel) and scores it.
MetricsReport Evaluate(const Model &model, const Corpus &corpus, const PhonePartition &partition,
                       const std::string &label = "");

/// Frame errors on one utterance when the phone posterior is restricted to
/// the utterance's true language (hard mask), and without masking.
struct HardMaskCounts {
  std::size_t unmasked_errors = 0;
  std::size_t masked_errors = 0;
};
HardMaskCounts HardMaskErrors(const ForwardRecord &record, const Utterance &utt,
                              std::size_t target_delay, const PhonePartition &partition);

/// Plain-text table. Columns: config, FER-lang1, FER-lang2, lang-acc,
/// confusion and, when `masked`, masked-FER-lang1 and masked-FER-lang2.
/// Values that do not apply print as "-".
std::string FormatMetricsHeader(bool masked);
std::string FormatMetricsRow(const MetricsReport &r, bool masked);

}  // namespace mtrnet

#endif  // MTRNET_NETWORK_H_
