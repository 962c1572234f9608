// tests/experiment_test.cc

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

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "mtrnet/experiment.h"

namespace mtrnet {
namespace {

GeneratedCorpus SmallCorpus() {
  CorpusSpec cs;
  cs.phones_per_language = 3;
  cs.feat_dim = 3;
  cs.utterances_per_language = 10;
  cs.frames_min = 6;
  cs.frames_max = 10;
  cs.seed = 2;
  return GenerateCorpus(cs);
}

ExperimentOptions SmallOptions() {
  ExperimentOptions o;
  o.cell_dim = 6;
  o.proj_dim = 3;
  o.lr_cell_dim = 4;
  o.lr_proj_dim = 2;
  o.target_delay = 1;
  o.splice_context = 1;
  o.train.epochs = 2;
  o.train.batch_size = 4;
  return o;
}

TEST(SweepSpecTest, DefaultHasTwelveDistinctRows) {
  auto spec = DefaultSweepSpec();
  ASSERT_EQ(spec.size(), 12u);
  std::set<std::string> labels;
  for (const auto &e : spec) {
    labels.insert(e.label);
    EXPECT_EQ(e.config.Label(), e.label);
  }
  const std::set<std::string> want = {"i:r",   "f:r",   "o:r",   "g:r",   "ifo:r",   "ifog:r",
                                      "i:r,p", "f:r,p", "o:r,p", "g:r,p", "ifo:r,p", "ifog:r,p"};
  EXPECT_EQ(labels, want);
}

TEST(SweepSpecTest, ParseRules) {
  auto s = ParseSweepSpec({"g:r", "ifo:r,p"});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].label, "ifo:r,p");
  EXPECT_THROW(ParseSweepSpec({"g:r", "g:r"}), Error);
  EXPECT_THROW(ParseSweepSpec({"none"}), Error);
  EXPECT_THROW(ParseSweepSpec({"q:r"}), Error);
}

TEST(ExperimentTest, ModelSpecFromCorpus) {
  GeneratedCorpus gc = SmallCorpus();
  ExperimentOptions o = SmallOptions();
  ModelSpec s = MakeModelSpec(o, gc.train);
  EXPECT_EQ(s.asr.input_dim, 9u);
  EXPECT_EQ(s.asr.output_dim, 6u);
  EXPECT_EQ(s.lr.output_dim, 2u);
  EXPECT_EQ(s.lr.cell_dim, 4u);
  o.mode = Mode::kSingleBilingual;
  EXPECT_EQ(MakeModelSpec(o, gc.train).lr, CellDims{});
}

TEST(ExperimentTest, HoldoutEveryTenth) {
  // Alternating languages: the split must count within each language.
  std::vector<Utterance> u(40);
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k].id = std::to_string(k);
    u[k].language = static_cast<int>(k % 2);
  }
  auto [fit, hold] = SplitHoldout(u);
  ASSERT_EQ(hold.size(), 4u);
  EXPECT_EQ(hold[0].id, "18");
  EXPECT_EQ(hold[1].id, "19");
  EXPECT_EQ(hold[2].id, "38");
  EXPECT_EQ(hold[3].id, "39");
  EXPECT_EQ(fit.size(), 36u);
}

TEST(ExperimentTest, SweepRowsAndDeterminism) {
  GeneratedCorpus gc = SmallCorpus();
  auto entries = ParseSweepSpec({"g:r", "i:r,p"});
  auto a = RunSweep(SmallOptions(), entries, gc.train, gc.test);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].label, "baseline");
  EXPECT_FALSE(a[0].lang_accuracy.has_value());
  EXPECT_EQ(a[1].label, "g:r");
  EXPECT_TRUE(a[1].lang_accuracy.has_value());
  auto b = RunSweep(SmallOptions(), entries, gc.train, gc.test);
  EXPECT_EQ(FormatSweepTable(a), FormatSweepTable(b));
  const std::string table = FormatSweepTable(a);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

TEST(ExperimentTest, MismatchedCorporaRejected) {
  GeneratedCorpus gc = SmallCorpus();
  Corpus other = gc.test;
  other.feat_dim = 4;
  EXPECT_THROW(RunExperiment(SmallOptions(), gc.train, other, "x"), Error);
}

TEST(GradCheckSuiteTest, FilteredSuitePasses) {
  GradCheckSuiteOptions o;
  o.configs = ParseSweepSpec({"g:r,p"});
  auto cases = RunGradCheckSuite(o);
  std::vector<std::string> labels;
  for (const auto &c : cases) {
    labels.push_back(c.label);
    EXPECT_TRUE(c.report.pass) << c.label << " " << c.report.worst_tensor << " "
                               << c.report.max_rel_error;
  }
  EXPECT_EQ(labels, (std::vector<std::string>{"cell:asr", "cell:lr", "single", "g:r,p"}));
  o.include_single = false;
  EXPECT_EQ(RunGradCheckSuite(o).size(), 1u);
}

TEST(GradCheckSuiteTest, ImpossibleToleranceFails) {
  GradCheckSuiteOptions o;
  o.configs = ParseSweepSpec({"g:r"});
  o.tol = 1e-12;
  bool any_fail = false;
  for (const auto &c : RunGradCheckSuite(o)) any_fail |= !c.report.pass;
  EXPECT_TRUE(any_fail);
}

}  // namespace
}  // namespace mtrnet
