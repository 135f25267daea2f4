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

#include "mtctc/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtctc/error.hpp"

namespace mtctc::ctc {

double LogSumExp(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double LogSumExp(std::span<const double> values) {
  double m = kLogZero;
  for (double v : values) m = std::max(m, v);
  if (m == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

LogProbSequence::LogProbSequence(int num_frames, int num_labels,
                                 std::vector<double> values)
    : num_frames_(num_frames), num_labels_(num_labels), values_(std::move(values)) {
  if (num_frames_ < 1 || num_labels_ < 1) {
    throw Error(ErrorKind::kInvalidArgument, "log-prob sequence needs T>=1, K>=1");
  }
  if (values_.size() != size_t(num_frames_) * width()) {
    throw Error(ErrorKind::kInvalidArgument, "log-prob sequence size mismatch");
  }
}

LogProbSequence LogProbSequence::FromScores(int num_frames, int num_labels,
                                            std::span<const double> scores) {
  const int w = num_labels + 1;
  if (scores.size() != size_t(num_frames) * w) {
    throw Error(ErrorKind::kInvalidArgument, "score matrix size mismatch");
  }
  std::vector<double> values(scores.begin(), scores.end());
  for (int t = 0; t < num_frames; ++t) {
    std::span<double> row(values.data() + size_t(t) * w, w);
    const double lse = LogSumExp(row);
    for (double& v : row) v -= lse;
  }
  return LogProbSequence(num_frames, num_labels, std::move(values));
}

double LogProbSequence::MaxNormalizationError() const {
  double worst = 0.0;
  for (int t = 0; t < num_frames_; ++t) {
    worst = std::max(worst, std::abs(LogSumExp(frame(t))));
  }
  return worst;
}

LabelSeq Collapse(std::span<const int> path, int blank) {
  LabelSeq out;
  int prev = -1;
  for (int p : path) {
    if (p != prev && p != blank) out.push_back(p);
    prev = p;
  }
  return out;
}

std::vector<int> ExtendLabels(std::span<const int> labels, int blank) {
  std::vector<int> ext;
  ext.reserve(2 * labels.size() + 1);
  ext.push_back(blank);
  for (int l : labels) {
    if (l == blank) {
      throw Error(ErrorKind::kInvalidArgument, "blank inside label sequence");
    }
    ext.push_back(l);
    ext.push_back(blank);
  }
  return ext;
}

int MinFrames(std::span<const int> labels) {
  int n = static_cast<int>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

bool IsFeasible(int num_frames, std::span<const int> labels) {
  return num_frames >= MinFrames(labels);
}

Path CanonicalPath(std::span<const int> labels, int num_frames, int blank) {
  if (!IsFeasible(num_frames, labels)) {
    throw Error(ErrorKind::kInfeasible, "no path of length " +
                                            std::to_string(num_frames));
  }
  Path path;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (i > 0 && labels[i] == labels[i - 1]) path.push_back(blank);
    path.push_back(labels[i]);
  }
  path.resize(num_frames, blank);
  return path;
}

namespace {

void CheckLabels(const LogProbSequence& lp, std::span<const int> labels) {
  for (int l : labels) {
    if (l < 0 || l >= lp.num_labels()) {
      throw Error(ErrorKind::kOutOfRange,
                  "label " + std::to_string(l) + " outside [0," +
                      std::to_string(lp.num_labels()) + ")");
    }
  }
  if (!IsFeasible(lp.num_frames(), labels)) {
    throw Error(ErrorKind::kInfeasible,
                "T=" + std::to_string(lp.num_frames()) + " but labels need " +
                    std::to_string(MinFrames(labels)) + " frames");
  }
}

// Whether state s may be entered from s-2 (skipping the blank between).
bool CanSkip(const std::vector<int>& ext, int s, int blank) {
  return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
}

}  // namespace

CtcResult CtcLoss(const LogProbSequence& lp, std::span<const int> labels) {
  CheckLabels(lp, labels);
  const int T = lp.num_frames();
  const int blank = lp.blank();

  CtcResult result;
  CtcLattice& lat = result.lattice;
  lat.extended = ExtendLabels(labels, blank);
  lat.num_frames = T;
  lat.num_states = static_cast<int>(lat.extended.size());
  const int S = lat.num_states;
  const auto& ext = lat.extended;
  lat.alpha.assign(size_t(T) * S, kLogZero);
  lat.beta.assign(size_t(T) * S, kLogZero);
  auto alpha = [&](int t, int s) -> double& { return lat.alpha[size_t(t) * S + s]; };
  auto beta = [&](int t, int s) -> double& { return lat.beta[size_t(t) * S + s]; };

  alpha(0, 0) = lp(0, blank);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double acc = alpha(t - 1, s);
      if (s >= 1) acc = LogSumExp(acc, alpha(t - 1, s - 1));
      if (CanSkip(ext, s, blank)) acc = LogSumExp(acc, alpha(t - 1, s - 2));
      if (acc != kLogZero) alpha(t, s) = acc + lp(t, ext[s]);
    }
  }

  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double acc = beta(t + 1, s) + lp(t + 1, ext[s]);
      if (s + 1 < S) acc = LogSumExp(acc, beta(t + 1, s + 1) + lp(t + 1, ext[s + 1]));
      if (s + 2 < S && CanSkip(ext, s + 2, blank)) {
        acc = LogSumExp(acc, beta(t + 1, s + 2) + lp(t + 1, ext[s + 2]));
      }
      beta(t, s) = acc;
    }
  }

  lat.log_likelihood = alpha(T - 1, S - 1);
  if (S > 1) lat.log_likelihood = LogSumExp(lat.log_likelihood, alpha(T - 1, S - 2));
  if (!std::isfinite(lat.log_likelihood)) {
    throw Error(ErrorKind::kInfeasible, "label sequence has zero probability");
  }
  // -log p is non-negative; clamp the rounding residue of certain paths.
  result.loss = std::max(0.0, -lat.log_likelihood);
  return result;
}

std::vector<double> CtcGradFromLattice(const LogProbSequence& lp,
                                       const CtcLattice& lat) {
  const int T = lp.num_frames();
  const int W = lp.width();
  std::vector<double> grad(size_t(T) * W);
  std::vector<double> occupancy(W);
  for (int t = 0; t < T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kLogZero);
    for (int s = 0; s < lat.num_states; ++s) {
      const int k = lat.extended[s];
      occupancy[k] = LogSumExp(occupancy[k], lat.alpha_at(t, s) + lat.beta_at(t, s));
    }
    for (int k = 0; k < W; ++k) {
      grad[size_t(t) * W + k] =
          std::exp(lp(t, k)) - std::exp(occupancy[k] - lat.log_likelihood);
    }
  }
  return grad;
}

std::vector<double> CtcGrad(const LogProbSequence& lp, std::span<const int> labels) {
  return CtcGradFromLattice(lp, CtcLoss(lp, labels).lattice);
}

TotalLoss ComputeTotalLoss(const HeadTarget& char_head,
                           const std::optional<HeadTarget>& row_head,
                           double row_weight) {
  TotalLoss out;
  const CtcResult c = CtcLoss(char_head.log_probs, char_head.labels);
  out.char_loss = c.loss;
  out.char_grad = CtcGradFromLattice(char_head.log_probs, c.lattice);
  out.total = out.char_loss;
  if (row_head) {
    if (row_head->log_probs.num_frames() != char_head.log_probs.num_frames()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "char and row heads disagree on T");
    }
    const CtcResult r = CtcLoss(row_head->log_probs, row_head->labels);
    out.row_loss = r.loss;
    out.row_grad = CtcGradFromLattice(row_head->log_probs, r.lattice);
    if (row_weight != 1.0) {
      for (double& g : out.row_grad) g *= row_weight;
    }
    out.total = out.char_loss + row_weight * r.loss;
  }
  return out;
}

double BruteForceLikelihood(const LogProbSequence& lp, std::span<const int> labels) {
  const int T = lp.num_frames();
  const int W = lp.width();
  if (std::pow(double(W), double(T)) > kBruteForcePathLimit) {
    throw Error(ErrorKind::kInvalidArgument,
                "brute force over " + std::to_string(W) + "^" +
                    std::to_string(T) + " paths exceeds the guard");
  }
  for (int l : labels) {
    if (l < 0 || l >= lp.num_labels()) {
      throw Error(ErrorKind::kOutOfRange, "label " + std::to_string(l));
    }
  }
  const LabelSeq target(labels.begin(), labels.end());
  Path path(T, 0);
  double total = 0.0;
  while (true) {
    if (Collapse(path, lp.blank()) == target) {
      double log_p = 0.0;
      for (int t = 0; t < T; ++t) log_p += lp(t, path[t]);
      total += std::exp(log_p);
    }
    int t = T - 1;
    while (t >= 0 && ++path[t] == W) path[t--] = 0;
    if (t < 0) break;
  }
  return total;
}

}  // namespace mtctc::ctc
