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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "mtctc/ctc.hpp"
#include "mtctc/rng.hpp"

namespace mtctc::testing {

// Fresh, empty scratch directory under the build tree.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::path(MTCTC_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random valid distribution per frame, optionally peaked so probabilities
// span several orders of magnitude.
inline ctc::LogProbSequence RandomLogProbs(Rng& rng, int frames, int labels,
                                           double scale = 2.0) {
  std::vector<double> scores(size_t(frames) * (labels + 1));
  for (double& s : scores) s = scale * rng.Normal();
  return ctc::LogProbSequence::FromScores(frames, labels, scores);
}

inline LabelSeq RandomLabels(Rng& rng, int length, int labels) {
  LabelSeq l(length);
  for (int& v : l) v = static_cast<int>(rng.Below(labels));
  return l;
}

// Levenshtein distance from the full (|a|+1) x (|b|+1) table.
inline int FullTableEditDistance(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

inline double RelativeError(double a, double b, double floor = 0.0) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

}  // namespace mtctc::testing
