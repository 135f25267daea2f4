/* Copyright 2026 The mtctc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <span>
#include <vector>

#include "mtctc/ctc.hpp"

namespace mtctc::ctc {

// Per-sample CTC losses over a batch, evaluated in parallel. Output order
// matches input order.
std::vector<double> BatchCtcLoss(std::span<const LogProbSequence> log_probs,
                                 std::span<const LabelSeq> labels);

// Sum in index order, so the mean does not depend on thread scheduling.
double OrderedMean(std::span<const double> values);

namespace reference {
std::vector<double> BatchCtcLoss(std::span<const LogProbSequence> log_probs,
                                 std::span<const LabelSeq> labels);
}  // namespace reference

}  // namespace mtctc::ctc
