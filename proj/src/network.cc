// src/network.cc

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

#include "mtrnet/network.h"

#include <cstdio>
#include <sstream>

namespace mtrnet {

std::string ModeName(Mode m) {
  return m == Mode::kSingleBilingual ? "single" : "multitask";
}

Mode ParseMode(const std::string &s) {
  if (s == "single" || s == "single_bilingual") return Mode::kSingleBilingual;
  if (s == "multitask") return Mode::kMultitask;
  throw Error("unknown mode '" + s + "' (expected single or multitask)");
}

void ModelSpec::Validate() const {
  asr.Validate();
  if (asr.output_dim != phone_classes)
    throw Error("ModelSpec: ASR output dim must equal phone_classes");
  if (language_classes < 2) throw Error("ModelSpec: language_classes must be >= 2");
  if (!(lambda_asr >= 0.0) || !(lambda_lr >= 0.0))
    throw Error("ModelSpec: loss weights must be non-negative");
  if (mode == Mode::kMultitask) {
    lr.Validate();
    if (lr.output_dim != language_classes)
      throw Error("ModelSpec: LR output dim must equal language_classes");
    if (lr.input_dim != asr.input_dim) throw Error("ModelSpec: towers must share input_dim");
    feedback.Validate();
  } else if (feedback.AnyTarget()) {
    throw Error("ModelSpec: single_bilingual mode has no feedback links");
  }
}

Model InitModel(const ModelSpec &spec, std::uint64_t seed, double scale, double forget_bias) {
  spec.Validate();
  Model m;
  m.spec = spec;
  Rng rng(seed);
  if (spec.mode == Mode::kMultitask) {
    m.params = InitMultitask(spec.asr, spec.lr, spec.feedback, rng, scale, forget_bias);
  } else {
    m.params.tower_a = InitParams(spec.asr, rng, scale, forget_bias);
  }
  return m;
}

namespace {

void CheckInput(const Model &model, const Utterance &utt) {
  if (utt.frames.empty()) throw Error("utterance '" + utt.id + "' has no frames");
  if (utt.phones.size() != utt.frames.size())
    throw Error("utterance '" + utt.id + "': targets not aligned with frames");
  for (const Vector &f : utt.frames) CheckDim(f.size(), model.spec.asr.input_dim, "feature frame");
}

double CrossEntropy(const Vector &post, std::size_t target) {
  return -std::log(post[target]);
}

}  // namespace

ForwardRecord ForwardUtterance(const Model &model, const Utterance &utt) {
  CheckInput(model, utt);
  const MultiTaskParams &p = model.params;
  ForwardRecord rec;
  const std::size_t T = utt.frames.size();
  rec.phone_post.reserve(T);
  rec.caches.reserve(T);
  if (model.spec.mode == Mode::kMultitask) {
    JointState state = JointState::Zeros(p.tower_a.dims, p.tower_l.dims);
    for (std::size_t t = 0; t < T; ++t) {
      MtStepOutput s = MtStepForward(p, utt.frames[t], state);
      rec.phone_post.push_back(Softmax(s.y_a));
      rec.lang_post.push_back(Softmax(s.y_l));
      rec.caches.push_back(std::move(s.cache));
      state = std::move(s.state);
    }
  } else {
    CellState state = CellState::Zeros(p.tower_a.dims);
    for (std::size_t t = 0; t < T; ++t) {
      StepOutput s = StepForward(p.tower_a, utt.frames[t], state);
      rec.phone_post.push_back(Softmax(s.y));
      MtStepCache c;
      c.a = std::move(s.cache);
      rec.caches.push_back(std::move(c));
      state = std::move(s.state);
    }
  }
  return rec;
}

namespace {

struct Losses {
  double asr = 0.0, lr = 0.0;
};

Losses ComputeLosses(const Model &model, const Utterance &utt, const ForwardRecord &rec) {
  for (int ph : utt.phones)
    if (ph < 0 || static_cast<std::size_t>(ph) >= model.spec.phone_classes)
      throw Error("utterance '" + utt.id + "': phone id out of range");
  const std::size_t T = utt.frames.size();
  Losses l;
  for (std::size_t t = 0; t < T; ++t)
    l.asr += CrossEntropy(rec.phone_post[t], utt.phones[AlignedFrame(t, model.spec.target_delay)]);
  l.asr /= static_cast<double>(T);
  if (model.spec.mode == Mode::kMultitask) {
    if (utt.language < 0 || static_cast<std::size_t>(utt.language) >= model.spec.language_classes)
      throw Error("utterance '" + utt.id + "': language id out of range");
    for (std::size_t t = 0; t < T; ++t) l.lr += CrossEntropy(rec.lang_post[t], utt.language);
    l.lr /= static_cast<double>(T);
  }
  return l;
}

}  // namespace

double Loss(const Model &model, const Utterance &utt) {
  ForwardRecord rec = ForwardUtterance(model, utt);
  Losses l = ComputeLosses(model, utt, rec);
  double loss = model.spec.lambda_asr * l.asr;
  if (model.spec.mode == Mode::kMultitask) loss += model.spec.lambda_lr * l.lr;
  return loss;
}

LossGrad LossAndGrad(const Model &model, const Utterance &utt) {
  const ModelSpec &spec = model.spec;
  const MultiTaskParams &p = model.params;
  ForwardRecord rec = ForwardUtterance(model, utt);
  Losses l = ComputeLosses(model, utt, rec);

  LossGrad out;
  out.asr_loss = l.asr;
  out.lr_loss = l.lr;
  out.loss = spec.lambda_asr * l.asr;
  out.grads = p.ZerosLike();

  const std::size_t T = utt.frames.size();
  const double wa = spec.lambda_asr / static_cast<double>(T);
  const double wl = spec.lambda_lr / static_cast<double>(T);

  // d CE / d logits = posterior - onehot(target).
  auto head_grad = [](const Vector &post, std::size_t target, double w) {
    Vector dy(post.size());
    for (std::size_t k = 0; k < post.size(); ++k) dy[k] = w * post[k];
    dy[target] -= w;
    return dy;
  };

  if (spec.mode == Mode::kMultitask) {
    out.loss += spec.lambda_lr * l.lr;
    JointStateGrad dnext = JointStateGrad::Zeros(p.tower_a.dims, p.tower_l.dims);
    for (std::size_t t = T; t-- > 0;) {
      Vector dy_a = head_grad(rec.phone_post[t], utt.phones[AlignedFrame(t, spec.target_delay)], wa);
      Vector dy_l = head_grad(rec.lang_post[t], utt.language, wl);
      MtStepBackwardOutput b = MtStepBackward(p, rec.caches[t], dy_a, dy_l, dnext, out.grads);
      dnext = std::move(b.dprev);
    }
  } else {
    StateGrad dnext = StateGrad::Zeros(p.tower_a.dims);
    for (std::size_t t = T; t-- > 0;) {
      Vector dy = head_grad(rec.phone_post[t], utt.phones[AlignedFrame(t, spec.target_delay)], wa);
      StepBackwardOutput b = StepBackward(p.tower_a, rec.caches[t].a, dy, dnext, out.grads.tower_a);
      dnext = std::move(b.dprev);
    }
  }
  return out;
}

std::size_t Argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

namespace {

// Unnormalized masked scores; the argmax does not depend on normalization.
Vector MaskedScores(std::span<const double> phone_post, std::span<const double> lang_weight,
                    const PhonePartition &part) {
  part.Validate();
  CheckDim(phone_post.size(), part.NumPhones(), "phone posterior");
  CheckDim(lang_weight.size(), part.num_languages, "language weights");
  Vector s(phone_post.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = phone_post[k] * lang_weight[part.language_of[k]];
  return s;
}

Vector RunningLanguage(const ForwardRecord &rec, std::size_t t) {
  Vector mean(rec.lang_post[0].size());
  for (std::size_t u = 0; u <= t; ++u)
    for (std::size_t g = 0; g < mean.size(); ++g) mean[g] += rec.lang_post[u][g];
  for (double &v : mean) v /= static_cast<double>(t + 1);
  return mean;
}

}  // namespace

Vector MaskPosterior(std::span<const double> phone_post, std::span<const double> lang_weight,
                     const PhonePartition &partition) {
  Vector s = MaskedScores(phone_post, lang_weight, partition);
  double sum = 0.0;
  for (double v : s) sum += v;
  if (!(sum > 0.0)) throw Error("MaskPosterior: mask removes all probability mass");
  for (double &v : s) v /= sum;
  return s;
}

Vector LanguageAwarePosterior(const ForwardRecord &rec, std::size_t t,
                              const PhonePartition &partition) {
  if (rec.lang_post.empty())
    throw Error("LanguageAwarePosterior: record has no language posteriors (single-task model)");
  if (t >= rec.phone_post.size()) throw Error("LanguageAwarePosterior: frame out of range");
  return MaskPosterior(rec.phone_post[t], RunningLanguage(rec, t), partition);
}

HardMaskCounts HardMaskErrors(const ForwardRecord &rec, const Utterance &utt,
                              std::size_t target_delay, const PhonePartition &partition) {
  Vector onehot(partition.num_languages);
  onehot[utt.language] = 1.0;
  HardMaskCounts c;
  for (std::size_t t = 0; t < rec.phone_post.size(); ++t) {
    const std::size_t target = utt.phones[AlignedFrame(t, target_delay)];
    c.unmasked_errors += Argmax(rec.phone_post[t]) != target;
    c.masked_errors += Argmax(MaskedScores(rec.phone_post[t], onehot, partition)) != target;
  }
  return c;
}

MetricsReport ScoreRecords(const std::vector<ForwardRecord> &records,
                           const std::vector<Utterance> &utts, std::size_t target_delay,
                           const PhonePartition &part, const std::string &label) {
  if (utts.empty()) throw Error("Evaluate: empty corpus");
  if (records.size() != utts.size()) throw Error("ScoreRecords: one record per utterance");
  part.Validate();
  const std::size_t L = part.num_languages;
  const bool mt = !records[0].lang_post.empty();

  MetricsReport r;
  r.label = label;
  std::vector<std::size_t> frames(L), errors(L), masked(L);
  std::size_t confused = 0, correct = 0;
  for (std::size_t n = 0; n < utts.size(); ++n) {
    const Utterance &utt = utts[n];
    const ForwardRecord &rec = records[n];
    if (rec.phone_post.size() != utt.frames.size() || (mt && rec.lang_post.size() != utt.frames.size()))
      throw Error("ScoreRecords: record length differs from utterance '" + utt.id + "'");
    const std::size_t g = static_cast<std::size_t>(utt.language);
    if (g >= L) throw Error("ScoreRecords: language id out of range");
    Vector running(mt ? L : 0);
    for (std::size_t t = 0; t < utt.frames.size(); ++t) {
      CheckDim(rec.phone_post[t].size(), part.NumPhones(), "phone posterior");
      const std::size_t target = utt.phones[AlignedFrame(t, target_delay)];
      const std::size_t pred = Argmax(rec.phone_post[t]);
      errors[g] += pred != target;
      confused += part.language_of[pred] != utt.language;
      if (mt) {
        for (std::size_t k = 0; k < L; ++k) running[k] += rec.lang_post[t][k];
        Vector w = running;
        for (double &v : w) v /= static_cast<double>(t + 1);
        masked[g] += Argmax(MaskedScores(rec.phone_post[t], w, part)) != target;
      }
    }
    frames[g] += utt.frames.size();
    r.frames += utt.frames.size();
    if (mt) correct += Argmax(running) == g;
  }
  r.utterances = utts.size();
  auto ratio = [](std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
  };
  for (std::size_t g = 0; g < L; ++g) r.fer.push_back(ratio(errors[g], frames[g]));
  r.confusion = ratio(confused, r.frames);
  if (mt) {
    r.lang_accuracy = ratio(correct, r.utterances);
    for (std::size_t g = 0; g < L; ++g) r.masked_fer.push_back(ratio(masked[g], frames[g]));
  }
  return r;
}

MetricsReport Evaluate(const Model &model, const Corpus &corpus, const PhonePartition &part,
                       const std::string &label) {
  if (corpus.utterances.empty()) throw Error("Evaluate: empty corpus");
  CheckDim(part.NumPhones(), model.spec.phone_classes, "partition phone count");
  const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(corpus.utterances.size());
  std::vector<ForwardRecord> records(corpus.utterances.size());
  std::vector<std::string> failures(corpus.utterances.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t n = 0; n < N; ++n) {
    try {
      records[n] = ForwardUtterance(model, corpus.utterances[n]);
      records[n].caches.clear();
      records[n].caches.shrink_to_fit();
    } catch (const std::exception &e) {
      failures[n] = e.what();
    }
  }
  for (const auto &f : failures)
    if (!f.empty()) throw Error(f);
  return ScoreRecords(records, corpus.utterances, model.spec.target_delay, part, label);
}

namespace {

std::string Cell(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

std::string Row(const std::vector<std::string> &cells) {
  std::string s;
  char buf[64];
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::snprintf(buf, sizeof(buf), k == 0 ? "%-12s" : " %16s", cells[k].c_str());
    s += buf;
  }
  return s;
}

}  // namespace

std::string FormatMetricsHeader(bool masked) {
  std::vector<std::string> h = {"config", "FER-lang1", "FER-lang2", "lang-acc", "confusion"};
  if (masked) {
    h.push_back("masked-FER-lang1");
    h.push_back("masked-FER-lang2");
  }
  return Row(h);
}

std::string FormatMetricsRow(const MetricsReport &r, bool masked) {
  auto at = [](const std::vector<double> &v, std::size_t k) -> std::optional<double> {
    return k < v.size() ? std::optional<double>(v[k]) : std::nullopt;
  };
  std::vector<std::string> c = {r.label.empty() ? "-" : r.label, Cell(at(r.fer, 0)),
                                Cell(at(r.fer, 1)), Cell(r.lang_accuracy), Cell(r.confusion)};
  if (masked) {
    c.push_back(Cell(at(r.masked_fer, 0)));
    c.push_back(Cell(at(r.masked_fer, 1)));
  }
  return Row(c);
}

}  // namespace mtrnet
