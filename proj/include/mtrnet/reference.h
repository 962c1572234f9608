// include/mtrnet/reference.h

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

#ifndef MTRNET_REFERENCE_H_
#define MTRNET_REFERENCE_H_

#include <vector>

#include "mtrnet/network.h"

namespace mtrnet {

// Scalar-loop evaluation of the model, written straight from the recurrence
// and kept apart from the kernel path. Used as the finite-difference
// objective by the gradient checks and as a cross-check of ForwardUtterance.
// `Real` is double or long double.

/// Same objective as Loss(model, utt).
template <class Real>
Real ReferenceLoss(const Model &model, const Utterance &utt);

/// sum_t <readout_t, y_t> for a bare tower from zero state.
template <class Real>
Real ReferenceCellLoss(const LstmpParams &params, const std::vector<Vector> &frames,
                       const std::vector<Vector> &readout);

/// Per-frame (phone, language) posteriors from the reference path.
std::pair<std::vector<Vector>, std::vector<Vector>> ReferencePosteriors(const Model &model,
                                                                       const Utterance &utt);

extern template double ReferenceLoss<double>(const Model &, const Utterance &);
extern template long double ReferenceLoss<long double>(const Model &, const Utterance &);
extern template double ReferenceCellLoss<double>(const LstmpParams &, const std::vector<Vector> &,
                                                 const std::vector<Vector> &);
extern template long double ReferenceCellLoss<long double>(const LstmpParams &,
                                                           const std::vector<Vector> &,
                                                           const std::vector<Vector> &);

}  // namespace mtrnet

#endif  // MTRNET_REFERENCE_H_
