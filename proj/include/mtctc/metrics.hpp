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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtctc/ctc.hpp"
#include "mtctc/manifest.hpp"
#include "mtctc/net.hpp"

namespace mtctc {

// Best path (per-frame argmax, lowest index wins ties, so the blank at K loses
// every tie) followed by collapse.
LabelSeq GreedyDecode(const ctc::LogProbSequence& log_probs);

// Levenshtein distance with unit insertion, deletion and substitution costs.
int EditDistance(std::span<const int> a, std::span<const int> b);

struct SampleEval {
  int word_id = 0;
  int writer_id = 0;
  LabelSeq reference;
  LabelSeq hypothesis;
  int edits = 0;

  bool operator==(const SampleEval&) const = default;
};

// wer = 100 * word_errors / num_words; cer = 100 * char_edit_total / num_chars
// with the reference length as the denominator.
struct EvalReport {
  std::string split;
  int64_t num_words = 0;
  int64_t num_chars = 0;
  int64_t word_errors = 0;
  int64_t char_edit_total = 0;
  double wer = 0.0;
  double cer = 0.0;
  std::vector<SampleEval> samples;

  bool operator==(const EvalReport&) const = default;
};

SampleEval ScoreSample(int word_id, int writer_id, LabelSeq reference,
                       LabelSeq hypothesis);
EvalReport MakeReport(std::string split, std::vector<SampleEval> samples);

// Greedy transcription of every sample, in parallel; result order matches
// input order.
template <typename Scalar>
std::vector<SampleEval> DecodeSamples(const Model<Scalar>& model,
                                      std::span<const WordSample> samples);

namespace reference {
template <typename Scalar>
std::vector<SampleEval> DecodeSamples(const Model<Scalar>& model,
                                      std::span<const WordSample> samples);
}  // namespace reference

// Throws Error(kConfigMismatch) when the model was trained on a different
// label map than the manifest's.
template <typename Scalar>
EvalReport Evaluate(const Model<Scalar>& model, const DatasetManifest& manifest,
                    std::string_view split);

// Line records followed by a `#summary` block of key=value lines:
//   #mtctc-eval v1
//   #fields=word_id writer_id edits reference hypothesis
//   <word_id>\t<writer_id>\t<edits>\t<ref ids>\t<hyp ids>
//   #summary
//   split=, num_words=, num_chars=, word_errors=, char_edit_total=, wer=, cer=
std::string SerializeReport(const EvalReport& report);
EvalReport ParseReport(std::string_view text);

}  // namespace mtctc
