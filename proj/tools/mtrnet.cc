// tools/mtrnet.cc

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

// mtrnet: corpus generation, training, evaluation, feedback-configuration
// sweeps and gradient checking for the two-tower multi-task LSTMP model.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mtrnet/checkpoint.h"
#include "mtrnet/experiment.h"
#include "mtrnet/synth_corpus.h"

using namespace mtrnet;

namespace {

const char *kConfigHelp =
    "Feedback configuration as <targets>:<info>. Targets are letters from "
    "'ifog' (input, forget, output gate, cell input g); info is r, p or r,p "
    "(recurrent / nonrecurrent projection of the other tower). Examples: "
    "g:r,p (both projections into g), ifo:r, ifog:r,p (equivalent to input "
    "augmentation).";

struct ModelFlags {
  std::string mode = "multitask";
  std::string config;
  std::string targets;
  std::string info = "r";
};

void AddConfigFlags(CLI::App *app, ModelFlags &f) {
  app->add_option("--mode", f.mode, "single (bilingual baseline) or multitask")
      ->check(CLI::IsMember({"single", "multitask"}))
      ->capture_default_str();
  app->add_option("--config", f.config, kConfigHelp);
  app->add_option("--targets", f.targets, "Feedback targets, subset of 'ifog' (alternative to --config)");
  app->add_option("--info", f.info, "Feedback info: r, p or r,p (with --targets)")->capture_default_str();
}

void AddModelFlags(CLI::App *app, ExperimentOptions &o) {
  app->add_option("--cell", o.cell_dim, "ASR tower cell dimension")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--proj", o.proj_dim, "ASR tower projection dims (r and p)")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--lr-cell", o.lr_cell_dim, "LR tower cell dimension")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--lr-proj", o.lr_proj_dim, "LR tower projection dims")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--target-delay", o.target_delay, "Output delay in frames")->capture_default_str();
  app->add_option("--splice-context", o.splice_context, "Frames spliced on each side")->capture_default_str();
  app->add_option("--lambda-asr", o.lambda_asr, "ASR loss weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  app->add_option("--lambda-lr", o.lambda_lr, "LR loss weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  app->add_option("--init-scale", o.init_scale, "Uniform init range")->capture_default_str()->check(CLI::NonNegativeNumber);
  app->add_option("--forget-bias", o.forget_bias, "Initial forget-gate bias")->capture_default_str();
  app->add_option("--init-seed", o.init_seed, "Model initialization seed")->capture_default_str();

  TrainConfig &t = o.train;
  app->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
  app->add_option("--batch-size", t.batch_size, "Utterances per minibatch")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--learning-rate", t.learning_rate, "SGD learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--momentum", t.momentum, "Momentum in [0,1)")->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  app->add_option("--clip-norm", t.clip_norm, "Global gradient-norm clip")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--seed", t.seed, "Shuffling seed")->capture_default_str();
  app->add_option("--lr-halving", t.lr_halving, "Halve the learning rate when holdout loss stalls (true/false)")
      ->capture_default_str();
}

void ResolveModelFlags(ExperimentOptions &o, const ModelFlags &f) {
  o.mode = ParseMode(f.mode);
  if (!f.config.empty() && !f.targets.empty()) throw Error("give either --config or --targets, not both");
  if (!f.config.empty()) o.feedback = FeedbackConfig::Parse(f.config);
  else if (!f.targets.empty()) o.feedback = FeedbackConfig::Parse(f.targets + ":" + f.info);
  if (o.mode == Mode::kSingleBilingual && o.feedback.AnyTarget())
    throw Error("--mode single takes no feedback configuration");
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << text;
}

Corpus LoadCorpus(const std::string &path) {
  if (!std::filesystem::exists(path)) throw Error("corpus file not found: " + path);
  return ReadCorpusFile(path);
}

void EpochToStderr(const EpochRecord &r) {
  std::fprintf(stderr, "epoch %zu lr %.5g train %.5f (asr %.5f lr %.5f) holdout %.5f  %.1fs\n",
               r.epoch, r.learning_rate, r.train_loss, r.asr_loss, r.lr_loss, r.holdout_loss,
               r.wall_seconds);
}

}  // namespace

int main(int argc, char **argv) {
  ConfigureThreadsFromEnv();
  CLI::App app{"Multi-task recurrent LSTMP models for language-aware phone recognition"};
  app.require_subcommand(1);

  // gen
  CorpusSpec cs;
  std::string gen_out;
  auto *gen = app.add_subcommand("gen", "Generate a synthetic two-language corpus");
  gen->add_option("--out", gen_out, "Output directory (train.corpus, test.corpus)")->required();
  gen->add_option("--seed", cs.seed, "Generator seed")->capture_default_str();
  gen->add_option("--languages", cs.languages, "Number of languages (must be 2)")
      ->capture_default_str()->check(CLI::Range(2, 2));
  gen->add_option("--phones-per-language", cs.phones_per_language, "Phones per language")
      ->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--feat-dim", cs.feat_dim, "Feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--utterances-per-language", cs.utterances_per_language,
                  "Utterances per language before the 90/10 split")->capture_default_str();
  gen->add_option("--frames-min", cs.frames_min, "Minimum frames per utterance")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--frames-max", cs.frames_max, "Maximum frames per utterance")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--overlap", cs.overlap, "Cross-language phone mean overlap in [0,1]")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen->add_option("--stddev", cs.emission_stddev, "Emission noise stddev")->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--self-loop", cs.self_loop, "Phone self-transition probability")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));

  // train
  ExperimentOptions train_opts;
  ModelFlags train_flags;
  std::string train_corpus, train_out, train_log;
  auto *train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--train", train_corpus, "Training corpus file")->required();
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--log", train_log, "Train log path (default <out>.log)");
  AddConfigFlags(train, train_flags);
  AddModelFlags(train, train_opts);

  // eval
  std::string eval_model, eval_test, eval_label, eval_out;
  bool eval_masked = false;
  auto *eval = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  eval->add_option("--model", eval_model, "Checkpoint path")->required();
  eval->add_option("--test", eval_test, "Test corpus file")->required();
  eval->add_flag("--masked", eval_masked, "Also report language-aware masked FER (multitask only)");
  eval->add_option("--label", eval_label, "Row label (default: feedback config)");
  eval->add_option("--out", eval_out, "Also write the table to this file");

  // sweep
  ExperimentOptions sweep_opts;
  std::string sweep_train, sweep_test, sweep_out;
  std::vector<std::string> sweep_configs;
  auto *sweep = app.add_subcommand("sweep", "Train the baseline and every feedback configuration");
  sweep->add_option("--train", sweep_train, "Training corpus file")->required();
  sweep->add_option("--test", sweep_test, "Test corpus file")->required();
  sweep->add_option("--configs", sweep_configs,
                    std::string("Configurations to run (default: all 12). ") + kConfigHelp);
  sweep->add_option("--out", sweep_out, "Also write the table to this file");
  AddModelFlags(sweep, sweep_opts);

  // gradcheck
  GradCheckSuiteOptions gc;
  std::vector<std::string> gc_configs;
  auto *gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  gradcheck->add_option("--tol", gc.tol, "Maximum relative error")->capture_default_str();
  gradcheck->add_option("--eps", gc.eps, "Central-difference step")->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "Seed for the random tiny models")->capture_default_str();
  gradcheck->add_option("--frames", gc.frames, "Frames per test sequence")->capture_default_str()->check(CLI::PositiveNumber);
  gradcheck->add_option("--config", gc_configs,
                        std::string("Check only these configurations. ") + kConfigHelp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GeneratedCorpus g = GenerateCorpus(cs);
      std::filesystem::create_directories(gen_out);
      const auto dir = std::filesystem::path(gen_out);
      WriteCorpusFile((dir / "train.corpus").string(), g.train);
      WriteCorpusFile((dir / "test.corpus").string(), g.test);
      std::printf("wrote %zu train and %zu test utterances to %s\n", g.train.utterances.size(),
                  g.test.utterances.size(), gen_out.c_str());
      return 0;
    }

    if (*train) {
      ResolveModelFlags(train_opts, train_flags);
      Corpus raw = LoadCorpus(train_corpus);
      ModelSpec spec = MakeModelSpec(train_opts, raw);
      Corpus spliced = SpliceCorpus(raw, train_opts.splice_context);
      auto [fit, holdout] = SplitHoldout(spliced.utterances);
      Model init = InitModel(spec, train_opts.init_seed, train_opts.init_scale, train_opts.forget_bias);
      std::fprintf(stderr, "training %s model (%s), %zu parameters, %zu utterances\n",
                   ModeName(spec.mode).c_str(), spec.feedback.Label().c_str(),
                   init.params.NumParams(), fit.size());
      TrainResult tr = Train(init, fit, holdout, train_opts.train, EpochToStderr);
      SaveCheckpoint(train_out, tr.model);
      std::ostringstream log;
      WriteTrainLog(log, tr.log);
      WriteText(train_log.empty() ? train_out + ".log" : train_log, log.str());
      if (tr.log.diverged) {
        std::fprintf(stderr, "training diverged; last good parameters saved to %s\n", train_out.c_str());
        return 2;
      }
      return 0;
    }

    if (*eval) {
      Model m = LoadCheckpoint(eval_model);
      if (eval_masked && m.spec.mode != Mode::kMultitask)
        throw Error("--masked needs a multitask checkpoint: a single-mode model has no LR tower");
      Corpus raw = LoadCorpus(eval_test);
      if (raw.feat_dim * (2 * m.spec.splice_context + 1) != m.spec.asr.input_dim ||
          raw.phone_classes != m.spec.phone_classes || raw.language_classes != m.spec.language_classes)
        throw Error("corpus dimensions do not match the checkpoint's model spec");
      Corpus test = SpliceCorpus(raw, m.spec.splice_context);
      std::string label = eval_label;
      if (label.empty())
        label = m.spec.mode == Mode::kMultitask ? m.spec.feedback.Label() : std::string("baseline");
      MetricsReport r = Evaluate(m, test, test.Partition(), label);
      std::string table = FormatMetricsHeader(eval_masked) + "\n" + FormatMetricsRow(r, eval_masked) + "\n";
      std::fputs(table.c_str(), stdout);
      if (!eval_out.empty()) WriteText(eval_out, table);
      return 0;
    }

    if (*sweep) {
      Corpus train_raw = LoadCorpus(sweep_train);
      Corpus test_raw = LoadCorpus(sweep_test);
      std::vector<SweepEntry> entries =
          sweep_configs.empty() ? DefaultSweepSpec() : ParseSweepSpec(sweep_configs);
      std::fprintf(stderr, "%s\n", FormatMetricsHeader(true).c_str());
      auto rows = RunSweep(sweep_opts, entries, train_raw, test_raw, [](const MetricsReport &r) {
        std::fprintf(stderr, "%s\n", FormatMetricsRow(r, true).c_str());
      });
      const std::string table = FormatSweepTable(rows);
      std::fputs(table.c_str(), stdout);
      if (!sweep_out.empty()) WriteText(sweep_out, table);
      return 0;
    }

    if (*gradcheck) {
      if (!gc_configs.empty()) {
        gc.configs = ParseSweepSpec(gc_configs);
        gc.include_single = false;
      }
      bool all_pass = true;
      for (const GradCheckCase &c : RunGradCheckSuite(gc)) {
        const GradCheckReport &r = c.report;
        std::printf("%-10s %-4s max_rel_err %.3e  params %zu  worst %s[%zu] analytic %.6e numeric %.6e\n",
                    c.label.c_str(), r.pass ? "PASS" : "FAIL", r.max_rel_error, r.checked,
                    r.worst_tensor.c_str(), r.worst_index, r.worst_analytic, r.worst_numeric);
        all_pass = all_pass && r.pass;
      }
      std::printf("%s\n", all_pass ? "gradcheck: all passed" : "gradcheck: FAILED");
      return all_pass ? 0 : 1;
    }
  } catch (const std::exception &e) {
    std::fprintf(stderr, "mtrnet: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
