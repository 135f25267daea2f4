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

// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <vector>

#include "mtctc/ctc.hpp"
#include "mtctc/ctc_batch.hpp"
#include "mtctc/glyphforge.hpp"
#include "mtctc/kernels.hpp"
#include "mtctc/metrics.hpp"
#include "mtctc/net.hpp"
#include "mtctc/rng.hpp"

namespace {

using mtctc::kernels::ConvShape;

std::vector<float> RandomVector(size_t n, uint64_t seed) {
  mtctc::Rng rng(seed);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.Uniform(-1.0, 1.0));
  return v;
}

ConvShape ShapeFor(const benchmark::State& state) {
  // Second trunk layer of the default model on a 12-character word.
  return ConvShape{16, 32, 16, static_cast<int>(state.range(0)), 3};
}

template <bool kParallel>
void BM_ConvForward(benchmark::State& state) {
  const ConvShape s = ShapeFor(state);
  const auto in = RandomVector(size_t(s.in_channels) * s.height * s.width, 1);
  const auto w = RandomVector(size_t(s.out_channels) * s.in_channels * 9, 2);
  const auto b = RandomVector(s.out_channels, 3);
  std::vector<float> out(size_t(s.out_channels) * s.height * s.width);
  for (auto _ : state) {
    if constexpr (kParallel) {
      mtctc::kernels::Conv2dForward<float>(s, in, w, b, out);
    } else {
      mtctc::kernels::reference::Conv2dForward<float>(s, in, w, b, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvForward<true>)->Arg(64)->Arg(192);
BENCHMARK(BM_ConvForward<false>)->Arg(64)->Arg(192);

template <bool kParallel>
void BM_ConvBackward(benchmark::State& state) {
  const ConvShape s = ShapeFor(state);
  const auto in = RandomVector(size_t(s.in_channels) * s.height * s.width, 1);
  const auto w = RandomVector(size_t(s.out_channels) * s.in_channels * 9, 2);
  const auto dout = RandomVector(size_t(s.out_channels) * s.height * s.width, 3);
  std::vector<float> dw(w.size()), db(s.out_channels), din(in.size());
  for (auto _ : state) {
    if constexpr (kParallel) {
      mtctc::kernels::Conv2dBackward<float>(s, in, w, dout, dw, db, din);
    } else {
      mtctc::kernels::reference::Conv2dBackward<float>(s, in, w, dout, dw, db, din);
    }
    benchmark::DoNotOptimize(din.data());
  }
}
BENCHMARK(BM_ConvBackward<true>)->Arg(64)->Arg(192);
BENCHMARK(BM_ConvBackward<false>)->Arg(64)->Arg(192);

struct CtcBatch {
  std::vector<mtctc::ctc::LogProbSequence> lp;
  std::vector<mtctc::LabelSeq> labels;
};

CtcBatch MakeBatch(int n) {
  CtcBatch b;
  mtctc::Rng rng(7);
  for (int i = 0; i < n; ++i) {
    const int len = 2 + static_cast<int>(rng.Below(11));
    const int frames = 8 * len;
    const int labels = 40;
    std::vector<double> scores(size_t(frames) * (labels + 1));
    for (double& s : scores) s = rng.Normal();
    b.lp.push_back(mtctc::ctc::LogProbSequence::FromScores(frames, labels, scores));
    mtctc::LabelSeq l(len);
    for (int& c : l) c = static_cast<int>(rng.Below(labels));
    b.labels.push_back(std::move(l));
  }
  return b;
}

template <bool kParallel>
void BM_BatchCtcLoss(benchmark::State& state) {
  const CtcBatch b = MakeBatch(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto losses = kParallel ? mtctc::ctc::BatchCtcLoss(b.lp, b.labels)
                            : mtctc::ctc::reference::BatchCtcLoss(b.lp, b.labels);
    benchmark::DoNotOptimize(losses.data());
  }
}
BENCHMARK(BM_BatchCtcLoss<true>)->Arg(256);
BENCHMARK(BM_BatchCtcLoss<false>)->Arg(256);

template <bool kParallel>
void BM_DecodeSamples(benchmark::State& state) {
  const mtctc::LabelMap map = mtctc::DefaultLabelMap();
  mtctc::ModelConfig cfg;
  cfg.num_chars = map.num_chars();
  cfg.num_rows = map.num_rows();
  const auto model = mtctc::Model<float>::Init(cfg);
  const mtctc::SynthAtlas atlas(map, 1);
  std::vector<mtctc::WordSample> samples;
  for (const auto& w : mtctc::RandomWordList(map, static_cast<int>(state.range(0)), 2, 6, 3)) {
    samples.push_back(mtctc::ComposeWordImage(w, 0, atlas, map));
  }
  for (auto _ : state) {
    auto out = kParallel ? mtctc::DecodeSamples(model, samples)
                         : mtctc::reference::DecodeSamples(model, samples);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DecodeSamples<true>)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeSamples<false>)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
