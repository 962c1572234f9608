// tests/cli_test.cc

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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mtrnet/checkpoint.h"
#include "mtrnet/experiment.h"

namespace mtrnet {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr
};

RunResult Cli(const std::string &args) {
  const std::string cmd = std::string(MTRNET_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE *p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

int CountLines(const std::string &s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mtrnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string P(const std::string &name) const { return (dir_ / name).string(); }

  // Small corpus and model flags so each command takes well under a second.
  void GenSmall() {
    ASSERT_EQ(Cli("gen --out " + P("c") +
                  " --utterances-per-language 10 --frames-min 5 --frames-max 8 --seed 3")
                  .code,
              0);
  }
  static std::string SmallModel() {
    return " --cell 8 --proj 4 --lr-cell 4 --lr-proj 2 --epochs 2 --target-delay 1 "
           "--splice-context 1";
  }

  fs::path dir_;
};

TEST_F(CliTest, GenIsDeterministic) {
  ASSERT_EQ(Cli("gen --out " + P("a")).code, 0);
  ASSERT_EQ(Cli("gen --out " + P("b")).code, 0);
  for (const char *f : {"train.corpus", "test.corpus"}) {
    const std::string a = Slurp(dir_ / "a" / f), b = Slurp(dir_ / "b" / f);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, b) << f;
  }
}

TEST_F(CliTest, GenHeaderDeclaresPhoneClasses) {
  ASSERT_EQ(Cli("gen --out " + P("a") + " --phones-per-language 10 --languages 2 "
                "--utterances-per-language 10")
                .code,
            0);
  const std::string text = Slurp(dir_ / "a" / "train.corpus");
  EXPECT_EQ(text.substr(0, text.find('\n')), "MTCORP1 8 20 2");
}

TEST_F(CliTest, GenRejectsBadFlags) {
  EXPECT_NE(Cli("gen --out " + P("a") + " --overlap 1.5").code, 0);
  EXPECT_NE(Cli("gen --out " + P("a") + " --frames-min 0").code, 0);
  EXPECT_NE(Cli("gen").code, 0);
  EXPECT_NE(Cli("bogus").code, 0);
}

TEST_F(CliTest, TrainMissingCorpusNamesPath) {
  RunResult r = Cli("train --train " + P("none.corpus") + " --out " + P("m.ckpt"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find(P("none.corpus")), std::string::npos) << r.out;
}

TEST_F(CliTest, ZeroEpochCheckpointIsInitialization) {
  GenSmall();
  ASSERT_EQ(Cli("train --train " + P("c/train.corpus") + " --out " + P("m.ckpt") +
                " --config g:r,p --epochs 0 --init-seed 5")
                .code,
            0);
  ExperimentOptions o;
  o.feedback = FeedbackConfig::Parse("g:r,p");
  o.init_seed = 5;
  const Corpus raw = ReadCorpusFile(P("c/train.corpus"));
  const Model want = InitModel(MakeModelSpec(o, raw), 5, o.init_scale, o.forget_bias);
  EXPECT_EQ(LoadCheckpoint(P("m.ckpt")), want);
}

TEST_F(CliTest, TargetsAndInfoFlags) {
  GenSmall();
  ASSERT_EQ(Cli("train --train " + P("c/train.corpus") + " --out " + P("m.ckpt") +
                " --mode multitask --info r,p --targets g --epochs 0")
                .code,
            0);
  Model m = LoadCheckpoint(P("m.ckpt"));
  EXPECT_EQ(m.spec.feedback.Label(), "g:r,p");
  EXPECT_EQ(m.params.cross.Count(), 4u);
  EXPECT_EQ(m.spec.target_delay, 5u);
  EXPECT_EQ(m.spec.splice_context, 2u);
  EXPECT_EQ(m.spec.asr.cell_dim, 64u);
  EXPECT_EQ(m.spec.asr.rproj_dim, 16u);
}

TEST_F(CliTest, EvalSchemaAndMaskedRefusal) {
  GenSmall();
  const std::string corpus = " --train " + P("c/train.corpus");
  ASSERT_EQ(Cli("train" + corpus + " --out " + P("s.ckpt") + " --mode single" + SmallModel()).code, 0);
  ASSERT_EQ(Cli("train" + corpus + " --out " + P("m.ckpt") + " --config g:r" + SmallModel()).code, 0);
  EXPECT_TRUE(fs::exists(P("m.ckpt.log")));

  RunResult plain = Cli("eval --model " + P("m.ckpt") + " --test " + P("c/test.corpus"));
  ASSERT_EQ(plain.code, 0) << plain.out;
  EXPECT_EQ(plain.out.find("masked"), std::string::npos);
  RunResult masked = Cli("eval --model " + P("m.ckpt") + " --test " + P("c/test.corpus") + " --masked");
  ASSERT_EQ(masked.code, 0) << masked.out;
  EXPECT_NE(masked.out.find("masked-FER-lang1"), std::string::npos);
  EXPECT_NE(masked.out.find("masked-FER-lang2"), std::string::npos);

  RunResult refused = Cli("eval --model " + P("s.ckpt") + " --test " + P("c/test.corpus") + " --masked");
  EXPECT_NE(refused.code, 0);
  EXPECT_NE(refused.out.find("LR tower"), std::string::npos) << refused.out;
  EXPECT_EQ(Cli("eval --model " + P("s.ckpt") + " --test " + P("c/test.corpus")).code, 0);
}

TEST_F(CliTest, EvalDimensionMismatch) {
  GenSmall();
  ASSERT_EQ(Cli("gen --out " + P("d") + " --feat-dim 5 --utterances-per-language 10").code, 0);
  ASSERT_EQ(Cli("train --train " + P("c/train.corpus") + " --out " + P("m.ckpt") + SmallModel()).code, 0);
  RunResult r = Cli("eval --model " + P("m.ckpt") + " --test " + P("d/test.corpus"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("error"), std::string::npos);
}

TEST_F(CliTest, EvalRejectsCorruptCheckpoint) {
  GenSmall();
  ASSERT_EQ(Cli("train --train " + P("c/train.corpus") + " --out " + P("m.ckpt") + SmallModel()).code, 0);
  std::string bytes = Slurp(P("m.ckpt"));
  bytes[20] ^= 0x10;
  std::ofstream(P("bad.ckpt"), std::ios::binary) << bytes;
  RunResult r = Cli("eval --model " + P("bad.ckpt") + " --test " + P("c/test.corpus"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("checksum"), std::string::npos) << r.out;
}

TEST_F(CliTest, SweepSingleConfig) {
  GenSmall();
  const std::string cmd = "sweep --train " + P("c/train.corpus") + " --test " + P("c/test.corpus") +
                          " --configs g:r" + SmallModel();
  RunResult a = Cli(cmd + " --out " + P("t1.txt"));
  ASSERT_EQ(a.code, 0) << a.out;
  const std::string table = Slurp(P("t1.txt"));
  EXPECT_EQ(CountLines(table), 3);  // header + baseline + g:r
  EXPECT_NE(table.find("\nbaseline "), std::string::npos);
  EXPECT_NE(table.find("\ng:r "), std::string::npos);
  ASSERT_EQ(Cli(cmd + " --out " + P("t2.txt")).code, 0);
  EXPECT_EQ(Slurp(P("t2.txt")), table);
  EXPECT_NE(Cli("sweep --train " + P("c/train.corpus") + " --test " + P("c/test.corpus") +
                " --configs none" + SmallModel())
                .code,
            0);
}

TEST_F(CliTest, GradcheckExitCodes) {
  RunResult ok = Cli("gradcheck");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("cell:asr"), std::string::npos);
  EXPECT_NE(ok.out.find("single"), std::string::npos);
  EXPECT_NE(ok.out.find("ifog:r,p"), std::string::npos);
  EXPECT_EQ(Cli("gradcheck --tol 1e-12").code, 1);
  RunResult one = Cli("gradcheck --config g:r,p");
  EXPECT_EQ(one.code, 0);
  EXPECT_EQ(CountLines(one.out), 2) << one.out;  // one case line + summary
  EXPECT_NE(one.out.find("g:r,p"), std::string::npos);
}

}  // namespace
}  // namespace mtrnet
