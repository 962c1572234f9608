// src/experiment.cc

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

#include "mtrnet/experiment.h"

#include <functional>
#include <map>
#include <set>

namespace mtrnet {

ModelSpec MakeModelSpec(const ExperimentOptions &o, const Corpus &raw) {
  ModelSpec s;
  s.mode = o.mode;
  s.phone_classes = raw.phone_classes;
  s.language_classes = raw.language_classes;
  s.target_delay = o.target_delay;
  s.splice_context = o.splice_context;
  s.lambda_asr = o.lambda_asr;
  s.lambda_lr = o.lambda_lr;
  const std::size_t input = raw.feat_dim * (2 * o.splice_context + 1);
  s.asr = {input, o.cell_dim, o.proj_dim, o.proj_dim, raw.phone_classes};
  if (o.mode == Mode::kMultitask) {
    s.lr = {input, o.lr_cell_dim, o.lr_proj_dim, o.lr_proj_dim, raw.language_classes};
    s.feedback = o.feedback;
  }
  s.Validate();
  return s;
}

std::pair<std::vector<Utterance>, std::vector<Utterance>> SplitHoldout(
    const std::vector<Utterance> &utts) {
  std::pair<std::vector<Utterance>, std::vector<Utterance>> out;
  std::map<int, std::size_t> seen;
  for (const Utterance &u : utts)
    (seen[u.language]++ % 10 == 9 ? out.second : out.first).push_back(u);
  return out;
}

ExperimentResult RunExperiment(const ExperimentOptions &opts, const Corpus &train_raw,
                               const Corpus &test_raw, const std::string &label) {
  if (train_raw.feat_dim != test_raw.feat_dim ||
      train_raw.phone_classes != test_raw.phone_classes ||
      train_raw.language_classes != test_raw.language_classes)
    throw Error("train and test corpora disagree on dimensions");
  const ModelSpec spec = MakeModelSpec(opts, train_raw);
  const Corpus train = SpliceCorpus(train_raw, opts.splice_context);
  const Corpus test = SpliceCorpus(test_raw, opts.splice_context);
  auto [fit, holdout] = SplitHoldout(train.utterances);

  Model init = InitModel(spec, opts.init_seed, opts.init_scale, opts.forget_bias);
  TrainResult tr = Train(init, fit, holdout, opts.train);
  ExperimentResult res{std::move(tr.model), std::move(tr.log), {}};
  res.metrics = Evaluate(res.model, test, test.Partition(), label);
  return res;
}

std::vector<SweepEntry> DefaultSweepSpec() {
  std::vector<SweepEntry> out;
  for (const char *targets : {"i", "f", "o", "g", "ifo", "ifog"})
    for (const char *info : {"r", "r,p"}) {
      std::string label = std::string(targets) + ":" + info;
      out.push_back({label, FeedbackConfig::Parse(label)});
    }
  return out;
}

std::vector<SweepEntry> ParseSweepSpec(const std::vector<std::string> &labels) {
  std::vector<SweepEntry> out;
  std::set<std::string> seen;
  for (const auto &l : labels) {
    FeedbackConfig cfg = FeedbackConfig::Parse(l);
    if (!cfg.AnyTarget()) throw Error("sweep config '" + l + "' has no feedback targets");
    const std::string canon = cfg.Label();
    if (!seen.insert(canon).second) throw Error("duplicate sweep config '" + l + "'");
    out.push_back({canon, cfg});
  }
  return out;
}

std::vector<MetricsReport> RunSweep(const ExperimentOptions &base,
                                    const std::vector<SweepEntry> &entries,
                                    const Corpus &train_raw, const Corpus &test_raw,
                                    const std::function<void(const MetricsReport &)> &on_row) {
  std::vector<MetricsReport> rows;
  ExperimentOptions single = base;
  single.mode = Mode::kSingleBilingual;
  single.feedback = FeedbackConfig{};
  rows.push_back(RunExperiment(single, train_raw, test_raw, "baseline").metrics);
  if (on_row) on_row(rows.back());
  for (const SweepEntry &e : entries) {
    ExperimentOptions mt = base;
    mt.mode = Mode::kMultitask;
    mt.feedback = e.config;
    rows.push_back(RunExperiment(mt, train_raw, test_raw, e.label).metrics);
    if (on_row) on_row(rows.back());
  }
  return rows;
}

std::string FormatSweepTable(const std::vector<MetricsReport> &rows) {
  std::string s = FormatMetricsHeader(true) + "\n";
  for (const auto &r : rows) s += FormatMetricsRow(r, true) + "\n";
  return s;
}

namespace {

// Mismatched r/p sizes so a swapped projection cannot pass unnoticed.
constexpr std::size_t kTinyInput = 3, kTinyPhones = 4, kTinyLanguages = 2;
const CellDims kTinyAsr{kTinyInput, 5, 3, 2, kTinyPhones};
const CellDims kTinyLr{kTinyInput, 4, 2, 3, kTinyLanguages};

Utterance RandomUtterance(Rng &rng, std::size_t frames) {
  Utterance u;
  u.id = "gradcheck";
  u.language = static_cast<int>(rng.Index(kTinyLanguages));
  for (std::size_t t = 0; t < frames; ++t) {
    Vector x(kTinyInput);
    for (double &v : x) v = rng.Normal();
    u.frames.push_back(std::move(x));
    // Phones drawn from the utterance's own language.
    u.phones.push_back(u.language * 2 + static_cast<int>(rng.Index(2)));
  }
  return u;
}

ModelSpec TinySpec(Mode mode, const FeedbackConfig &cfg) {
  ModelSpec s;
  s.mode = mode;
  s.asr = kTinyAsr;
  s.phone_classes = kTinyPhones;
  s.language_classes = kTinyLanguages;
  s.target_delay = 2;
  s.splice_context = 0;
  if (mode == Mode::kMultitask) {
    s.lr = kTinyLr;
    s.feedback = cfg;
  }
  return s;
}

}  // namespace

std::vector<GradCheckCase> RunGradCheckSuite(const GradCheckSuiteOptions &o) {
  std::vector<GradCheckCase> out;
  Rng rng(o.seed);
  if (o.include_single) {
    for (const auto &[name, dims] : {std::pair{"cell:asr", kTinyAsr}, std::pair{"cell:lr", kTinyLr}}) {
      LstmpParams p = InitParams(dims, rng, o.init_scale);
      std::vector<Vector> frames, readout;
      for (std::size_t t = 0; t < o.frames; ++t) {
        Vector x(dims.input_dim), w(dims.output_dim);
        for (double &v : x) v = rng.Normal();
        for (double &v : w) v = rng.Normal();
        frames.push_back(std::move(x));
        readout.push_back(std::move(w));
      }
      out.push_back({name, GradCheckCell(p, frames, readout, o.eps, o.tol)});
    }
    Model m = InitModel(TinySpec(Mode::kSingleBilingual, {}), rng.NextU64(), o.init_scale);
    Utterance u = RandomUtterance(rng, o.frames);
    out.push_back({"single", GradCheck(m, u, o.eps, o.tol)});
  }
  for (const SweepEntry &e : o.configs) {
    Model m = InitModel(TinySpec(Mode::kMultitask, e.config), rng.NextU64(), o.init_scale);
    Utterance u = RandomUtterance(rng, o.frames);
    out.push_back({e.label, GradCheck(m, u, o.eps, o.tol)});
  }
  return out;
}

}  // namespace mtrnet
