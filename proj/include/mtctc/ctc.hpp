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

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mtctc/alphabet.hpp"

namespace mtctc::ctc {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

double LogSumExp(double a, double b);
double LogSumExp(std::span<const double> values);

// T x (K+1) per-timestep log-probabilities of one output head. Label ids are
// [0, K); the blank is index K.
class LogProbSequence {
 public:
  LogProbSequence() = default;
  // Throws if T < 1, K < 1 or the value count is not T*(K+1). Does not check
  // normalization; see MaxNormalizationError().
  LogProbSequence(int num_frames, int num_labels, std::vector<double> values);

  // Row-wise log-softmax of raw scores.
  static LogProbSequence FromScores(int num_frames, int num_labels,
                                    std::span<const double> scores);

  int num_frames() const { return num_frames_; }
  int num_labels() const { return num_labels_; }
  int blank() const { return num_labels_; }
  int width() const { return num_labels_ + 1; }

  double operator()(int t, int k) const { return values_[size_t(t) * width() + k]; }
  std::span<const double> frame(int t) const {
    return {values_.data() + size_t(t) * width(), size_t(width())};
  }
  const std::vector<double>& values() const { return values_; }

  // max_t |logsumexp(frame t)|.
  double MaxNormalizationError() const;

 private:
  int num_frames_ = 0;
  int num_labels_ = 0;
  std::vector<double> values_;
};

using Path = std::vector<int>;

// Merge adjacent repeats, then drop blanks.
LabelSeq Collapse(std::span<const int> path, int blank);

// [blank, l1, blank, l2, ..., lL, blank]; throws if a label equals `blank`.
std::vector<int> ExtendLabels(std::span<const int> labels, int blank);

// Fewest frames able to emit `labels`: L plus one per adjacent equal pair.
int MinFrames(std::span<const int> labels);
bool IsFeasible(int num_frames, std::span<const int> labels);

// A path of length `num_frames` collapsing to `labels`: labels with blanks
// between repeats, padded with trailing blanks. Requires feasibility.
Path CanonicalPath(std::span<const int> labels, int num_frames, int blank);

// Forward/backward tables over the extended label sequence, indexed [t][s].
// alpha[t][s] includes the emission at t; beta[t][s] covers frames t+1..T-1
// only, so logsumexp_s(alpha[t][s] + beta[t][s]) is the log-likelihood at
// every t.
struct CtcLattice {
  std::vector<int> extended;
  int num_frames = 0;
  int num_states = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  double log_likelihood = kLogZero;

  double alpha_at(int t, int s) const { return alpha[size_t(t) * num_states + s]; }
  double beta_at(int t, int s) const { return beta[size_t(t) * num_states + s]; }
};

struct CtcResult {
  double loss = 0.0;  // -log p(labels | x)
  CtcLattice lattice;
};

// Throws Error(kOutOfRange) for label ids outside [0, K) and Error(kInfeasible)
// when T is too short for the labels or the labels have zero probability.
CtcResult CtcLoss(const LogProbSequence& log_probs, std::span<const int> labels);

// Gradient of the loss w.r.t. pre-softmax scores z, where log_probs =
// log_softmax(z): softmax(z) minus the state occupancy. T x (K+1), row-major.
std::vector<double> CtcGrad(const LogProbSequence& log_probs,
                            std::span<const int> labels);
std::vector<double> CtcGradFromLattice(const LogProbSequence& log_probs,
                                       const CtcLattice& lattice);

// One head's input to the multi-task objective.
struct HeadTarget {
  const LogProbSequence& log_probs;
  std::span<const int> labels;
};

struct TotalLoss {
  double total = 0.0;
  double char_loss = 0.0;
  std::optional<double> row_loss;  // absent in baseline mode
  std::vector<double> char_grad;
  std::vector<double> row_grad;    // scaled by row_weight; empty when absent
};

// total = char_loss + row_weight * row_loss. Both heads must share T.
TotalLoss ComputeTotalLoss(const HeadTarget& char_head,
                           const std::optional<HeadTarget>& row_head,
                           double row_weight = 1.0);

inline constexpr double kBruteForcePathLimit = 1e7;

// Literal sum over every path whose collapse equals `labels`. Throws
// Error(kInvalidArgument) when (K+1)^T exceeds kBruteForcePathLimit.
double BruteForceLikelihood(const LogProbSequence& log_probs,
                            std::span<const int> labels);

}  // namespace mtctc::ctc
