// src/checkpoint.cc

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

#include "mtrnet/checkpoint.h"

#include <bit>
#include <charconv>
#include <limits>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace mtrnet {

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

void PutU64(std::string &out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t GetU64(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return v;
}

void PutDims(std::ostringstream &os, const char *prefix, const CellDims &d) {
  os << prefix << ".input_dim=" << d.input_dim << '\n'
     << prefix << ".cell_dim=" << d.cell_dim << '\n'
     << prefix << ".rproj_dim=" << d.rproj_dim << '\n'
     << prefix << ".pproj_dim=" << d.pproj_dim << '\n'
     << prefix << ".output_dim=" << d.output_dim << '\n';
}

std::string SpecText(const ModelSpec &s, std::size_t num_params) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "mode=" << ModeName(s.mode) << '\n';
  PutDims(os, "asr", s.asr);
  PutDims(os, "lr", s.lr);
  os << "feedback=" << s.feedback.Label() << '\n'
     << "phone_classes=" << s.phone_classes << '\n'
     << "language_classes=" << s.language_classes << '\n'
     << "target_delay=" << s.target_delay << '\n'
     << "splice_context=" << s.splice_context << '\n'
     << "lambda_asr=" << FormatDouble(s.lambda_asr) << '\n'
     << "lambda_lr=" << FormatDouble(s.lambda_lr) << '\n'
     << "num_params=" << num_params << '\n';
  return os.str();
}

struct ParsedSpec {
  ModelSpec spec;
  std::size_t num_params = 0;
};

ParsedSpec ParseSpecText(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("checkpoint: malformed spec line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string &k) -> const std::string & {
    auto it = kv.find(k);
    if (it == kv.end()) throw Error("checkpoint: spec block lacks '" + k + "'");
    return it->second;
  };
  auto count = [&](const std::string &k) -> std::size_t {
    const std::string &v = get(k);
    std::size_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
      throw Error("checkpoint: bad value for '" + k + "'");
    return out;
  };
  auto dims = [&](const std::string &p) {
    CellDims d;
    d.input_dim = count(p + ".input_dim");
    d.cell_dim = count(p + ".cell_dim");
    d.rproj_dim = count(p + ".rproj_dim");
    d.pproj_dim = count(p + ".pproj_dim");
    d.output_dim = count(p + ".output_dim");
    return d;
  };
  ParsedSpec out;
  ModelSpec &s = out.spec;
  s.mode = ParseMode(get("mode"));
  s.asr = dims("asr");
  s.lr = dims("lr");
  s.feedback = FeedbackConfig::Parse(get("feedback"));
  s.phone_classes = count("phone_classes");
  s.language_classes = count("language_classes");
  s.target_delay = count("target_delay");
  s.splice_context = count("splice_context");
  s.lambda_asr = ParseDouble(get("lambda_asr"));
  s.lambda_lr = ParseDouble(get("lambda_lr"));
  out.num_params = count("num_params");
  return out;
}

}  // namespace

std::string SerializeCheckpoint(const Model &model) {
  static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);
  std::string out(kCheckpointMagic, 8);
  const std::string text = SpecText(model.spec, model.params.NumParams());
  PutU64(out, text.size());
  out += text;
  model.params.ForEachTensor([&](const std::string &, std::span<const double> t) {
    for (double v : t) PutU64(out, std::bit_cast<std::uint64_t>(v));
  });
  PutU64(out, Fnv1a64(out));
  return out;
}

Model DeserializeCheckpoint(std::string_view in) {
  if (in.size() < 24 || in.substr(0, 8) != std::string_view(kCheckpointMagic, 8))
    throw Error("checkpoint: bad magic (not an MTLSTM01 file)");
  const std::uint64_t stored = GetU64(in, in.size() - 8);
  if (stored != Fnv1a64(in.substr(0, in.size() - 8)))
    throw Error("checkpoint: checksum mismatch (file corrupted or truncated)");
  const std::uint64_t text_len = GetU64(in, 8);
  if (text_len > in.size() - 24) throw Error("checkpoint: spec block overruns file");
  ParsedSpec ps = ParseSpecText(in.substr(16, text_len));
  ps.spec.Validate();

  Model m;
  m.spec = ps.spec;
  Rng unused(0);
  if (m.spec.mode == Mode::kMultitask) {
    m.params = InitMultitask(m.spec.asr, m.spec.lr, m.spec.feedback, unused, 0.0);
  } else {
    m.params.tower_a = LstmpParams::Zeros(m.spec.asr);
  }
  const std::size_t P = m.params.NumParams();
  if (P != ps.num_params) throw Error("checkpoint: parameter count disagrees with spec");
  if (16 + text_len + 8 * P + 8 != in.size()) throw Error("checkpoint: payload size mismatch");
  std::size_t pos = 16 + text_len;
  m.params.ForEachTensor([&](const std::string &, std::span<double> t) {
    for (double &v : t) {
      v = std::bit_cast<double>(GetU64(in, pos));
      pos += 8;
    }
  });
  return m;
}

void SaveCheckpoint(const std::string &path, const Model &model) {
  const std::string bytes = SerializeCheckpoint(model);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("write to '" + path + "' failed");
}

Model LoadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes);
}

}  // namespace mtrnet
