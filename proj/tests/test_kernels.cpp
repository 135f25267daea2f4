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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtctc/ctc_batch.hpp"
#include "mtctc/error.hpp"
#include "mtctc/kernels.hpp"
#include "mtctc/rng.hpp"
#include "test_util.hpp"

using namespace mtctc;
using namespace mtctc::kernels;

namespace {

std::vector<double> RandomVector(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Uniform(-1.0, 1.0);
  return v;
}

double MaxAbsDiff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("parallel convolution matches the serial reference") {
  Rng rng(7);
  // Large enough to cross the parallel threshold.
  for (const ConvShape s : {ConvShape{1, 16, 32, 192, 3}, ConvShape{16, 32, 16, 96, 3},
                            ConvShape{2, 3, 5, 7, 3}}) {
    const auto in = RandomVector(rng, size_t(s.in_channels) * s.height * s.width);
    const auto w = RandomVector(rng, size_t(s.out_channels) * s.in_channels * s.kernel * s.kernel);
    const auto b = RandomVector(rng, s.out_channels);
    const size_t out_n = size_t(s.out_channels) * s.height * s.width;
    std::vector<double> out(out_n), ref(out_n);
    Conv2dForward<double>(s, in, w, b, out);
    reference::Conv2dForward<double>(s, in, w, b, ref);
    CHECK(out == ref);

    const auto dout = RandomVector(rng, out_n);
    std::vector<double> dw(w.size()), db(b.size()), din(in.size());
    std::vector<double> rdw(w.size()), rdb(b.size()), rdin(in.size());
    Conv2dBackward<double>(s, in, w, dout, dw, db, din);
    reference::Conv2dBackward<double>(s, in, w, dout, rdw, rdb, rdin);
    // Same sums in a different association order.
    CHECK(MaxAbsDiff(dw, rdw) < 1e-10);
    CHECK(MaxAbsDiff(db, rdb) < 1e-10);
    CHECK(MaxAbsDiff(din, rdin) < 1e-12);
  }
}

TEST_CASE("convolution against a direct sum") {
  // 1 channel, 3x3 image, all-ones 3x3 kernel: each output is the sum of the
  // zero-padded neighbourhood.
  const ConvShape s{1, 1, 3, 3, 3};
  const std::vector<double> in{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<double> w(9, 1.0), b{0.5};
  std::vector<double> out(9);
  Conv2dForward<double>(s, in, w, b, out);
  const std::vector<double> expect{12.5, 21.5, 16.5, 27.5, 45.5, 33.5, 24.5, 39.5, 28.5};
  CHECK(out == expect);
}

TEST_CASE("relu and max-pool") {
  std::vector<double> act{-1, 2, 0.5, 3,
                          4, -5, 1, 0,
                          -1, -2, -3, -4,
                          -5, -6, -7, -8};
  std::vector<double> pooled(4);
  std::vector<int> arg(4);
  ReluMaxPool2x2<double>(1, 4, 4, act, pooled, arg);
  CHECK(pooled == std::vector<double>{4, 3, 0, 0});
  CHECK(arg[0] == 4);
  CHECK(arg[1] == 3);
  CHECK(act[5] == 0.0);  // relu applied in place
}

TEST_CASE("batch ctc matches the serial reference") {
  Rng rng(3);
  std::vector<ctc::LogProbSequence> lps;
  std::vector<LabelSeq> labels;
  for (int i = 0; i < 64; ++i) {
    lps.push_back(testing::RandomLogProbs(rng, 24, 6));
    labels.push_back(testing::RandomLabels(rng, 1 + static_cast<int>(rng.Below(8)), 6));
  }
  const auto a = ctc::BatchCtcLoss(lps, labels);
  const auto b = ctc::reference::BatchCtcLoss(lps, labels);
  CHECK(a == b);
  CHECK(ctc::OrderedMean(a) == ctc::OrderedMean(b));
}

TEST_CASE("batch ctc propagates typed errors") {
  Rng rng(3);
  std::vector<ctc::LogProbSequence> lps{testing::RandomLogProbs(rng, 1, 2)};
  std::vector<LabelSeq> labels{{0, 0}};
  try {
    ctc::BatchCtcLoss(lps, labels);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasible);
  }
}

}  // TEST_SUITE
