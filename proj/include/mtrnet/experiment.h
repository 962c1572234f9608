// include/mtrnet/experiment.h

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

#ifndef MTRNET_EXPERIMENT_H_
#define MTRNET_EXPERIMENT_H_

#include <string>
#include <utility>
#include <vector>

#include "mtrnet/network.h"
#include "mtrnet/trainer.h"

namespace mtrnet {

/// Everything needed to build and train one model from raw corpus files.
struct ExperimentOptions {
  Mode mode = Mode::kMultitask;
  FeedbackConfig feedback;
  std::size_t cell_dim = 64;
  std::size_t proj_dim = 16;
  std::size_t lr_cell_dim = 32;
  std::size_t lr_proj_dim = 8;
  std::size_t target_delay = 5;
  std::size_t splice_context = 2;
  double lambda_asr = 1.0;
  double lambda_lr = 1.0;
  double init_scale = 0.1;
  double forget_bias = 1.0;
  std::uint64_t init_seed = 1;
  TrainConfig train;
};

ModelSpec MakeModelSpec(const ExperimentOptions &opts, const Corpus &raw);

/// Within each language, every tenth training utterance (index % 10 == 9)
/// goes to the holdout set used for learning-rate halving.
std::pair<std::vector<Utterance>, std::vector<Utterance>> SplitHoldout(
    const std::vector<Utterance> &utts);

struct ExperimentResult {
  Model model;
  TrainLog log;
  MetricsReport metrics;
};

/// Splices, initializes, trains and evaluates on `test`.
ExperimentResult RunExperiment(const ExperimentOptions &opts, const Corpus &train_raw,
                               const Corpus &test_raw, const std::string &label);

struct SweepEntry {
  std::string label;
  FeedbackConfig config;
};

/// The twelve standard configurations: info {r} and {r,p} crossed with
/// targets {i}, {f}, {o}, {g}, {i,f,o}, {i,f,o,g}.
std::vector<SweepEntry> DefaultSweepSpec();

/// Parses compact labels ("g:r", "ifo:r,p"); labels must be unique.
std::vector<SweepEntry> ParseSweepSpec(const std::vector<std::string> &labels);

/// Trains the single_bilingual baseline and then one multitask model per
/// entry, all with the same seeds and budget. Row 0 is the baseline.
std::vector<MetricsReport> RunSweep(const ExperimentOptions &base,
                                    const std::vector<SweepEntry> &entries,
                                    const Corpus &train_raw, const Corpus &test_raw,
                                    const std::function<void(const MetricsReport &)> &on_row = {});

std::string FormatSweepTable(const std::vector<MetricsReport> &rows);

struct GradCheckSuiteOptions {
  double eps = 1e-5;
  double tol = 1e-5;
  std::uint64_t seed = 7;
  std::size_t frames = 6;
  double init_scale = 0.5;
  /// Multitask configurations to check; the single-task cases run only when
  /// `include_single` is set.
  std::vector<SweepEntry> configs = DefaultSweepSpec();
  bool include_single = true;
};

struct GradCheckCase {
  std::string label;
  GradCheckReport report;
};

/// Tiny random models: both bare towers (ASR- and LR-shaped), the
/// single_bilingual network, and the multitask network for each config.
std::vector<GradCheckCase> RunGradCheckSuite(const GradCheckSuiteOptions &opts);

}  // namespace mtrnet

#endif  // MTRNET_EXPERIMENT_H_
