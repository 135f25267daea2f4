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

#include "mtctc/ctc_batch.hpp"

#include <exception>

#include "mtctc/error.hpp"

namespace mtctc::ctc {

namespace {

void CheckSizes(std::span<const LogProbSequence> lp, std::span<const LabelSeq> labels) {
  if (lp.size() != labels.size()) {
    throw Error(ErrorKind::kInvalidArgument, "batch size mismatch");
  }
}

}  // namespace

std::vector<double> BatchCtcLoss(std::span<const LogProbSequence> log_probs,
                                 std::span<const LabelSeq> labels) {
  CheckSizes(log_probs, labels);
  const int64_t n = static_cast<int64_t>(log_probs.size());
  std::vector<double> losses(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (int64_t i = 0; i < n; ++i) {
    try {
      losses[i] = CtcLoss(log_probs[i], labels[i]).loss;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return losses;
}

double OrderedMean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

namespace reference {

std::vector<double> BatchCtcLoss(std::span<const LogProbSequence> log_probs,
                                 std::span<const LabelSeq> labels) {
  CheckSizes(log_probs, labels);
  std::vector<double> losses;
  losses.reserve(log_probs.size());
  for (size_t i = 0; i < log_probs.size(); ++i) {
    losses.push_back(CtcLoss(log_probs[i], labels[i]).loss);
  }
  return losses;
}

}  // namespace reference

}  // namespace mtctc::ctc
