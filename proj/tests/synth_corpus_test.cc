// tests/synth_corpus_test.cc

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

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "mtrnet/synth_corpus.h"

namespace mtrnet {
namespace {

CorpusSpec Small(double overlap, double stddev, std::uint64_t seed = 1) {
  CorpusSpec s;
  s.phones_per_language = 4;
  s.feat_dim = 3;
  s.utterances_per_language = 20;
  s.frames_min = 5;
  s.frames_max = 9;
  s.overlap = overlap;
  s.emission_stddev = stddev;
  s.seed = seed;
  return s;
}

std::size_t NearestMean(const Vector &x, const CorpusSpec &spec) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < spec.languages; ++g)
    for (std::size_t k = 0; k < spec.phones_per_language; ++k) {
      double d = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double e = x[j] - spec.emission_means[g][k][j];
        d += e * e;
      }
      if (d < best_d) {
        best_d = d;
        best = g * spec.phones_per_language + k;
      }
    }
  return best;
}

TEST(SynthCorpusTest, DefaultSplitSizes) {
  GeneratedCorpus c = GenerateCorpus(CorpusSpec{});
  EXPECT_EQ(c.train.utterances.size(), 432u);
  EXPECT_EQ(c.test.utterances.size(), 48u);
  EXPECT_EQ(c.train.phone_classes, 20u);
  EXPECT_EQ(c.train.feat_dim, 8u);
  std::size_t lang1 = 0;
  for (const auto &u : c.test.utterances) {
    lang1 += u.language == 1;
    EXPECT_GE(u.NumFrames(), 30u);
    EXPECT_LE(u.NumFrames(), 60u);
  }
  EXPECT_EQ(lang1, 24u);
}

TEST(SynthCorpusTest, Deterministic) {
  GeneratedCorpus a = GenerateCorpus(Small(0.9, 0.3, 4));
  GeneratedCorpus b = GenerateCorpus(Small(0.9, 0.3, 4));
  GeneratedCorpus c = GenerateCorpus(Small(0.9, 0.3, 5));
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
  std::ostringstream s1, s2;
  WriteCorpus(s1, a.train);
  WriteCorpus(s2, b.train);
  EXPECT_EQ(s1.str(), s2.str());
}

TEST(SynthCorpusTest, NoiselessSeparableNearestMeanIsPerfect) {
  const CorpusSpec spec = ResolveCorpusSpec(Small(0.0, 0.0));
  GeneratedCorpus c = GenerateCorpus(spec);
  std::size_t errors = 0, frames = 0;
  for (const auto &u : c.train.utterances)
    for (std::size_t t = 0; t < u.NumFrames(); ++t) {
      errors += NearestMean(u.frames[t], spec) != static_cast<std::size_t>(u.phones[t]);
      ++frames;
    }
  EXPECT_GT(frames, 0u);
  EXPECT_EQ(errors, 0u);
}

TEST(SynthCorpusTest, FullOverlapPairsAreIndistinguishable) {
  const CorpusSpec spec = ResolveCorpusSpec(Small(1.0, 0.0));
  for (std::size_t k = 0; k < spec.phones_per_language; ++k)
    EXPECT_EQ(spec.emission_means[0][k], spec.emission_means[1][k]);
  GeneratedCorpus c = GenerateCorpus(spec);
  // Any language-blind classifier errs on at least min(n0_k, n1_k) frames
  // of each pair; the nearest-mean one must do at least that badly.
  std::vector<std::size_t> n(2 * spec.phones_per_language);
  std::size_t errors = 0, frames = 0;
  for (const auto &u : c.train.utterances)
    for (std::size_t t = 0; t < u.NumFrames(); ++t) {
      ++n[u.phones[t]];
      errors += NearestMean(u.frames[t], spec) != static_cast<std::size_t>(u.phones[t]);
      ++frames;
    }
  std::size_t floor = 0;
  for (std::size_t k = 0; k < spec.phones_per_language; ++k)
    floor += std::min(n[k], n[k + spec.phones_per_language]);
  EXPECT_GE(errors, floor);
  // Ties go to language 0, so every language-1 frame is wrong.
  std::size_t lang1 = 0;
  for (std::size_t k = spec.phones_per_language; k < n.size(); ++k) lang1 += n[k];
  EXPECT_EQ(errors, lang1);
  EXPECT_GE(static_cast<double>(errors) / frames, 0.4);
}

TEST(SynthCorpusTest, OverlapMixesBaseMeans) {
  const CorpusSpec a = ResolveCorpusSpec(Small(0.0, 0.3));
  const CorpusSpec b = ResolveCorpusSpec(Small(0.9, 0.3));
  // Same seed, same base draws: b1_k = a.means[1][k], b0_k = a.means[0][k].
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_NEAR(b.emission_means[1][k][j],
                  0.9 * a.emission_means[0][k][j] + 0.1 * a.emission_means[1][k][j], 1e-15);
}

TEST(SynthCorpusTest, PhonesRespectPartition) {
  GeneratedCorpus c = GenerateCorpus(Small(0.9, 0.3, 2));
  for (const Corpus *cp : {&c.train, &c.test})
    for (const auto &u : cp->utterances) {
      EXPECT_EQ(u.phones.size(), u.frames.size());
      for (int ph : u.phones) EXPECT_EQ(c.partition.language_of.at(ph), u.language) << u.id;
    }
}

TEST(SynthCorpusTest, EmpiricalMeansConverge) {
  CorpusSpec s;
  s.utterances_per_language = 200;
  s.seed = 3;
  const CorpusSpec spec = ResolveCorpusSpec(s);
  GeneratedCorpus c = GenerateCorpus(spec);
  const std::size_t P = spec.phones_per_language;
  std::vector<Vector> sum(2 * P, Vector(spec.feat_dim));
  std::vector<std::size_t> count(2 * P);
  for (const auto &u : c.train.utterances)
    for (std::size_t t = 0; t < u.NumFrames(); ++t) {
      ++count[u.phones[t]];
      for (std::size_t j = 0; j < spec.feat_dim; ++j) sum[u.phones[t]][j] += u.frames[t][j];
    }
  for (std::size_t ph = 0; ph < 2 * P; ++ph) {
    ASSERT_GT(count[ph], 0u);
    const double bound = 3 * spec.emission_stddev / std::sqrt(static_cast<double>(count[ph]));
    const Vector &mean = spec.emission_means[ph / P][ph % P];
    for (std::size_t j = 0; j < spec.feat_dim; ++j)
      EXPECT_LT(std::abs(sum[ph][j] / count[ph] - mean[j]), bound) << "phone " << ph;
  }
}

TEST(SynthCorpusTest, SpecValidation) {
  CorpusSpec s = Small(1.5, 0.3);
  EXPECT_THROW(GenerateCorpus(s), Error);
  s = Small(0.5, 0.3);
  s.frames_min = 0;
  EXPECT_THROW(GenerateCorpus(s), Error);
  s = Small(0.5, 0.3);
  s.transitions.assign(2, Matrix(4, 4, 0.25));
  s.transitions[1](2, 3) = 0.3;
  EXPECT_THROW(GenerateCorpus(s), Error);
  s.transitions[1](2, 3) = 0.25;
  EXPECT_NO_THROW(GenerateCorpus(s));
}

TEST(SynthCorpusTest, SpliceHandExample) {
  std::vector<Vector> f = {Vector{1}, Vector{2}, Vector{3}};
  std::vector<Vector> s = Splice(f, 1);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], (Vector{1, 1, 2}));
  EXPECT_EQ(s[1], (Vector{1, 2, 3}));
  EXPECT_EQ(s[2], (Vector{2, 3, 3}));
}

TEST(SynthCorpusTest, SpliceEdges) {
  std::vector<Vector> one = {Vector{4, 5}};
  std::vector<Vector> s = Splice(one, 2);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (Vector{4, 5, 4, 5, 4, 5, 4, 5, 4, 5}));
  std::vector<Vector> f = {Vector{1, 2}, Vector{3, 4}};
  EXPECT_EQ(Splice(f, 0), f);
  EXPECT_THROW(Splice({}, 1), Error);
}

TEST(SynthCorpusTest, CorpusFileRoundTrip) {
  GeneratedCorpus c = GenerateCorpus(Small(0.9, 0.3, 6));
  std::stringstream ss;
  WriteCorpus(ss, c.train);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("MTCORP1 3 8 2\nUTT lang0_00000 0 ", 0), 0u) << text.substr(0, 40);
  Corpus back = ReadCorpus(ss);
  EXPECT_EQ(back, c.train);
}

TEST(SynthCorpusTest, ReadCorpusRejectsGarbage) {
  std::istringstream bad_magic("MTCORP9 1 2 2\n");
  EXPECT_THROW(ReadCorpus(bad_magic), Error);
  std::istringstream short_frames("MTCORP1 2 2 2\nUTT u 0 2\n1 2\n0 1\n");
  EXPECT_THROW(ReadCorpus(short_frames), Error);
  std::istringstream bad_phone("MTCORP1 1 2 2\nUTT u 0 1\n0.5\n7\n");
  EXPECT_THROW(ReadCorpus(bad_phone), Error);
  EXPECT_THROW(ReadCorpusFile("/nonexistent/dir/x.corpus"), Error);
}

TEST(SynthCorpusTest, DoubleTextRoundTrip) {
  for (double v : {0.1, -1e-300, 1.0 / 3, 12345.678, 0.0})
    EXPECT_EQ(ParseDouble(FormatDouble(v)), v);
  EXPECT_THROW(ParseDouble("1.5x"), Error);
}

TEST(PhonePartitionTest, Contiguous) {
  PhonePartition p = PhonePartition::Contiguous(6, 2);
  EXPECT_EQ(p.language_of, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_THROW(PhonePartition::Contiguous(5, 2), Error);
}

}  // namespace
}  // namespace mtrnet
