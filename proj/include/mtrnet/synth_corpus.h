// include/mtrnet/synth_corpus.h

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

#ifndef MTRNET_SYNTH_CORPUS_H_
#define MTRNET_SYNTH_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtrnet/numkit.h"

namespace mtrnet {

/// Feature frames with aligned phone targets and one language label.
struct Utterance {
  std::string id;
  std::vector<Vector> frames;
  std::vector<int> phones;
  int language = 0;

  std::size_t NumFrames() const { return frames.size(); }
  friend bool operator==(const Utterance &, const Utterance &) = default;
};

/// Maps every phone class to the language owning it. Each language has its
/// own disjoint phone set.
struct PhonePartition {
  std::size_t num_languages = 0;
  std::vector<int> language_of;

  std::size_t NumPhones() const { return language_of.size(); }
  /// Phones split into equal contiguous blocks, language g owning
  /// [g*P, (g+1)*P).
  static PhonePartition Contiguous(std::size_t phone_classes, std::size_t languages);
  void Validate() const;
};

struct Corpus {
  std::size_t feat_dim = 0;
  std::size_t phone_classes = 0;
  std::size_t language_classes = 0;
  std::vector<Utterance> utterances;

  PhonePartition Partition() const {
    return PhonePartition::Contiguous(phone_classes, language_classes);
  }
  friend bool operator==(const Corpus &, const Corpus &) = default;
};

/// Generator settings. `transitions` and `emission_means` may be left empty,
/// in which case they are drawn from `seed` by ResolveCorpusSpec.
struct CorpusSpec {
  std::size_t languages = 2;
  std::size_t phones_per_language = 10;
  std::size_t feat_dim = 8;
  std::size_t utterances_per_language = 240;
  std::size_t frames_min = 30;
  std::size_t frames_max = 60;
  double overlap = 0.9;
  double emission_stddev = 0.3;
  /// Self-transition probability used when drawing transition matrices.
  double self_loop = 0.6;
  std::uint64_t seed = 1;

  std::vector<Matrix> transitions;                 // per language, P x P
  std::vector<std::vector<Vector>> emission_means;  // [language][phone]

  void Validate() const;
};

/// Fills in transitions and emission means if absent. Language 0 phone k has
/// a standard-normal base mean b0_k; language 1 phone k has mean
/// overlap * b0_k + (1 - overlap) * b1_k with its own base b1_k.
CorpusSpec ResolveCorpusSpec(const CorpusSpec &spec);

struct GeneratedCorpus {
  Corpus train;
  Corpus test;
  PhonePartition partition;
};

/// Utterances alternate language; within each language every tenth utterance
/// (index % 10 == 9) goes to the test split.
GeneratedCorpus GenerateCorpus(const CorpusSpec &spec);

/// Output frame t is frames[t-context .. t+context] concatenated, with the
/// first and last frame replicated past the edges.
std::vector<Vector> Splice(const std::vector<Vector> &frames, std::size_t context);

/// Splices every utterance in place.
Corpus SpliceCorpus(const Corpus &corpus, std::size_t context);

/// Plain-text corpus format:
///   MTCORP1 <feat_dim> <phone_classes> <language_classes>
///   UTT <id> <language_id> <T>
///   <T lines of feat_dim floats>
///   <one line of T phone ids>
void WriteCorpus(std::ostream &os, const Corpus &corpus);
Corpus ReadCorpus(std::istream &is);
void WriteCorpusFile(const std::string &path, const Corpus &corpus);
Corpus ReadCorpusFile(const std::string &path);

/// Shortest round-trip decimal text, independent of the C locale.
std::string FormatDouble(double v);
double ParseDouble(std::string_view s);

}  // namespace mtrnet

#endif  // MTRNET_SYNTH_CORPUS_H_
