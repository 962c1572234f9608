// src/synth_corpus.cc

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

#include "mtrnet/synth_corpus.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mtrnet {

PhonePartition PhonePartition::Contiguous(std::size_t phone_classes, std::size_t languages) {
  if (languages == 0 || phone_classes == 0 || phone_classes % languages != 0) {
    std::ostringstream os;
    os << "PhonePartition: " << phone_classes << " phone classes cannot be split evenly over "
       << languages << " languages";
    throw Error(os.str());
  }
  PhonePartition part;
  part.num_languages = languages;
  const std::size_t per = phone_classes / languages;
  for (std::size_t k = 0; k < phone_classes; ++k)
    part.language_of.push_back(static_cast<int>(k / per));
  return part;
}

void PhonePartition::Validate() const {
  if (num_languages == 0 || language_of.empty()) throw Error("PhonePartition: undefined");
  for (int g : language_of)
    if (g < 0 || static_cast<std::size_t>(g) >= num_languages)
      throw Error("PhonePartition: phone mapped to a nonexistent language");
}

void CorpusSpec::Validate() const {
  if (languages != 2) throw Error("CorpusSpec: exactly 2 languages are supported");
  if (phones_per_language < 1) throw Error("CorpusSpec: phones_per_language must be >= 1");
  if (feat_dim < 1) throw Error("CorpusSpec: feat_dim must be >= 1");
  if (frames_min < 1 || frames_max < frames_min)
    throw Error("CorpusSpec: need 1 <= frames_min <= frames_max");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw Error("CorpusSpec: overlap must lie in [0,1]");
  if (!(emission_stddev >= 0.0)) throw Error("CorpusSpec: emission_stddev must be >= 0");
  if (!(self_loop >= 0.0 && self_loop <= 1.0))
    throw Error("CorpusSpec: self_loop must lie in [0,1]");
  if (!transitions.empty()) {
    if (transitions.size() != languages) throw Error("CorpusSpec: one transition matrix per language");
    for (std::size_t g = 0; g < languages; ++g) {
      const Matrix &t = transitions[g];
      if (t.rows() != phones_per_language || t.cols() != phones_per_language)
        throw Error("CorpusSpec: transition matrix has wrong shape");
      for (std::size_t r = 0; r < t.rows(); ++r) {
        double sum = 0.0;
        for (double v : t.row(r)) {
          if (!(v >= 0.0)) throw Error("CorpusSpec: negative transition probability");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
          std::ostringstream os;
          os << "CorpusSpec: transition row " << r << " of language " << g << " sums to " << sum;
          throw Error(os.str());
        }
      }
    }
  }
  if (!emission_means.empty()) {
    if (emission_means.size() != languages) throw Error("CorpusSpec: means per language missing");
    for (const auto &lang : emission_means) {
      if (lang.size() != phones_per_language) throw Error("CorpusSpec: means per phone missing");
      for (const auto &m : lang) CheckDim(m.size(), feat_dim, "emission mean");
    }
  }
}

CorpusSpec ResolveCorpusSpec(const CorpusSpec &in) {
  in.Validate();
  CorpusSpec spec = in;
  // Separate stream so the data draw is unaffected by which parts were given.
  Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t P = spec.phones_per_language;
  if (spec.transitions.empty()) {
    for (std::size_t g = 0; g < spec.languages; ++g) {
      Matrix t(P, P);
      for (std::size_t r = 0; r < P; ++r) {
        if (P == 1) {
          t(r, r) = 1.0;
          continue;
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < P; ++c)
          if (c != r) sum += (t(r, c) = rng.Uniform(0.05, 1.0));
        for (std::size_t c = 0; c < P; ++c)
          if (c != r) t(r, c) *= (1.0 - spec.self_loop) / sum;
        t(r, r) = spec.self_loop;
      }
      spec.transitions.push_back(std::move(t));
    }
  }
  if (spec.emission_means.empty()) {
    std::vector<std::vector<Vector>> base(spec.languages, std::vector<Vector>(P));
    for (auto &lang : base)
      for (auto &m : lang) {
        m = Vector(spec.feat_dim);
        for (double &v : m) v = rng.Normal();
      }
    spec.emission_means.assign(spec.languages, std::vector<Vector>(P));
    for (std::size_t k = 0; k < P; ++k) {
      spec.emission_means[0][k] = base[0][k];
      Vector m(spec.feat_dim);
      for (std::size_t j = 0; j < spec.feat_dim; ++j)
        m[j] = spec.overlap * base[0][k][j] + (1.0 - spec.overlap) * base[1][k][j];
      spec.emission_means[1][k] = std::move(m);
    }
  }
  spec.Validate();
  return spec;
}

namespace {

std::size_t SampleRow(std::span<const double> probs, Rng &rng) {
  double u = rng.Uniform(), acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  // Rounding left u beyond the cumulative sum; take the last nonzero entry.
  for (std::size_t k = probs.size(); k-- > 0;)
    if (probs[k] > 0.0) return k;
  return probs.size() - 1;
}

}  // namespace

GeneratedCorpus GenerateCorpus(const CorpusSpec &in) {
  const CorpusSpec spec = ResolveCorpusSpec(in);
  const std::size_t P = spec.phones_per_language;
  GeneratedCorpus out;
  for (Corpus *c : {&out.train, &out.test}) {
    c->feat_dim = spec.feat_dim;
    c->phone_classes = P * spec.languages;
    c->language_classes = spec.languages;
  }
  out.partition = PhonePartition::Contiguous(P * spec.languages, spec.languages);

  Rng rng(spec.seed);
  const std::size_t total = spec.utterances_per_language * spec.languages;
  for (std::size_t n = 0; n < total; ++n) {
    const std::size_t lang = n % spec.languages;
    const std::size_t index_in_lang = n / spec.languages;
    Utterance utt;
    utt.language = static_cast<int>(lang);
    char id[48];
    std::snprintf(id, sizeof(id), "lang%zu_%05zu", lang, index_in_lang);
    utt.id = id;
    const std::size_t T =
        spec.frames_min + rng.Index(spec.frames_max - spec.frames_min + 1);
    std::size_t phone = rng.Index(P);
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0) phone = SampleRow(spec.transitions[lang].row(phone), rng);
      const Vector &mean = spec.emission_means[lang][phone];
      Vector frame(spec.feat_dim);
      for (std::size_t j = 0; j < spec.feat_dim; ++j)
        frame[j] = mean[j] + spec.emission_stddev * rng.Normal();
      utt.frames.push_back(std::move(frame));
      utt.phones.push_back(static_cast<int>(lang * P + phone));
    }
    (index_in_lang % 10 == 9 ? out.test : out.train).utterances.push_back(std::move(utt));
  }
  return out;
}

std::vector<Vector> Splice(const std::vector<Vector> &frames, std::size_t context) {
  if (frames.empty()) throw Error("Splice: empty frame sequence");
  const std::ptrdiff_t T = static_cast<std::ptrdiff_t>(frames.size());
  const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(context);
  const std::size_t dim = frames[0].size();
  std::vector<Vector> out;
  out.reserve(frames.size());
  for (std::ptrdiff_t t = 0; t < T; ++t) {
    std::vector<double> v;
    v.reserve(dim * (2 * context + 1));
    for (std::ptrdiff_t u = t - k; u <= t + k; ++u) {
      const Vector &src = frames[std::clamp<std::ptrdiff_t>(u, 0, T - 1)];
      CheckDim(src.size(), dim, "spliced frame");
      v.insert(v.end(), src.begin(), src.end());
    }
    out.emplace_back(std::move(v));
  }
  return out;
}

Corpus SpliceCorpus(const Corpus &corpus, std::size_t context) {
  Corpus out = corpus;
  out.feat_dim = corpus.feat_dim * (2 * context + 1);
  for (auto &u : out.utterances) u.frames = Splice(u.frames, context);
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("corpus: malformed number '" + std::string(s) + "'");
  return v;
}

void WriteCorpus(std::ostream &os, const Corpus &c) {
  os << "MTCORP1 " << c.feat_dim << ' ' << c.phone_classes << ' ' << c.language_classes << '\n';
  for (const Utterance &u : c.utterances) {
    os << "UTT " << u.id << ' ' << u.language << ' ' << u.frames.size() << '\n';
    for (const Vector &f : u.frames) {
      for (std::size_t j = 0; j < f.size(); ++j) os << (j ? " " : "") << FormatDouble(f[j]);
      os << '\n';
    }
    for (std::size_t t = 0; t < u.phones.size(); ++t) os << (t ? " " : "") << u.phones[t];
    os << '\n';
  }
}

namespace {

std::vector<std::string_view> SplitWs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t ParseCount(std::string_view s, const char *what) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(std::string("corpus: malformed ") + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

Corpus ReadCorpus(std::istream &is) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char *what) {
    if (!std::getline(is, line))
      throw Error(std::string("corpus: unexpected end of input, expected ") + what);
    ++lineno;
    return SplitWs(line);
  };
  auto fail = [&](const std::string &msg) {
    throw Error("corpus line " + std::to_string(lineno) + ": " + msg);
  };

  Corpus c;
  auto hdr = next("header");
  if (hdr.size() != 4 || hdr[0] != "MTCORP1") fail("bad header, expected 'MTCORP1 <feat_dim> <phones> <languages>'");
  c.feat_dim = ParseCount(hdr[1], "feat_dim");
  c.phone_classes = ParseCount(hdr[2], "phone_classes");
  c.language_classes = ParseCount(hdr[3], "language_classes");

  while (std::getline(is, line)) {
    ++lineno;
    auto tok = SplitWs(line);
    if (tok.empty()) continue;
    if (tok.size() != 4 || tok[0] != "UTT") fail("expected 'UTT <id> <language> <T>'");
    Utterance u;
    u.id = std::string(tok[1]);
    u.language = static_cast<int>(ParseCount(tok[2], "language id"));
    if (static_cast<std::size_t>(u.language) >= c.language_classes) fail("language id out of range");
    const std::size_t T = ParseCount(tok[3], "frame count");
    if (T == 0) fail("utterance has no frames");
    for (std::size_t t = 0; t < T; ++t) {
      auto vals = next("feature frame");
      if (vals.size() != c.feat_dim) fail("frame has wrong dimension");
      Vector f(c.feat_dim);
      for (std::size_t j = 0; j < c.feat_dim; ++j) f[j] = ParseDouble(vals[j]);
      u.frames.push_back(std::move(f));
    }
    auto ph = next("phone targets");
    if (ph.size() != T) fail("phone target count does not match frame count");
    for (auto s : ph) {
      std::size_t id = ParseCount(s, "phone id");
      if (id >= c.phone_classes) fail("phone id out of range");
      u.phones.push_back(static_cast<int>(id));
    }
    c.utterances.push_back(std::move(u));
  }
  return c;
}

void WriteCorpusFile(const std::string &path, const Corpus &corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  WriteCorpus(os, corpus);
  if (!os) throw Error("write to '" + path + "' failed");
}

Corpus ReadCorpusFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open corpus file '" + path + "'");
  return ReadCorpus(is);
}

}  // namespace mtrnet
