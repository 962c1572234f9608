// include/mtrnet/checkpoint.h

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

#ifndef MTRNET_CHECKPOINT_H_
#define MTRNET_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "mtrnet/network.h"

namespace mtrnet {

// Binary checkpoint, all integers and floats little-endian:
//
//   8 bytes   magic "MTLSTM01"
//   u64       N, byte length of the spec block
//   N bytes   ModelSpec as "key=value\n" lines (includes num_params)
//   f64 * P   every tensor of MultiTaskParams::ForEachTensor, in order
//   u64       FNV-1a 64 checksum of all preceding bytes
//
// Tensor order: tower a (W_ix W_fx W_ox W_cx, W_ir W_fr W_or W_cr,
// w_ic w_fc w_oc, b_i b_f b_o b_c, W_rm W_pm W_yr W_yp b_y), tower l in the
// same order, then enabled cross links [direction][gate i,f,o,g][info r,p].

inline constexpr char kCheckpointMagic[] = "MTLSTM01";

std::string SerializeCheckpoint(const Model &model);
Model DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::string &path, const Model &model);
Model LoadCheckpoint(const std::string &path);

std::uint64_t Fnv1a64(std::string_view bytes);

}  // namespace mtrnet

#endif  // MTRNET_CHECKPOINT_H_
