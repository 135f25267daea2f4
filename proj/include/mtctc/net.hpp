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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtctc/ctc.hpp"
#include "mtctc/glyphforge.hpp"
#include "mtctc/image.hpp"

namespace mtctc {

// Convolutional-recurrent recognizer with a character head and an optional
// row (auxiliary) head on the same trunk.
//
// Trunk: N x [conv kxk same-pad -> ReLU -> 2x2 max-pool], so the width is
// downsampled by D = 2^N and every remaining column becomes one frame; the
// column (channels x remaining height) is projected to `projection_dim` with
// tanh, then fed to a (bi)directional GRU. Each head is a linear layer plus
// log-softmax over its labels and a trailing blank.
struct ModelConfig {
  std::vector<int> conv_channels = {16, 32};
  int kernel_size = 3;
  int projection_dim = 64;
  int hidden_size = 64;
  bool bidirectional = true;
  int num_chars = 12;
  int num_rows = 4;
  bool aux_head = true;
  int max_word_len = 12;
  uint64_t seed = 1;

  int downsampling() const { return 1 << conv_channels.size(); }
  int feature_height() const { return kGlyphSize >> conv_channels.size(); }
  int frames_for_width(int width) const { return width / downsampling(); }
  int rnn_output_dim() const { return bidirectional ? 2 * hidden_size : hidden_size; }

  // Throws Error(kInvalidArgument) when shapes cannot be derived, D does not
  // divide 32, or T = 32L/D < 2L+1 for some L <= max_word_len.
  void Validate() const;

  // `key=value` lines in a fixed order.
  std::string Serialize() const;
  static ModelConfig Parse(std::string_view text);
  uint64_t Hash() const;

  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<Scalar> data;

  bool operator==(const Tensor&) const = default;
};

struct HeadOutputs {
  ctc::LogProbSequence chars;
  std::optional<ctc::LogProbSequence> rows;
};

// Activations kept from a forward pass for backpropagation.
template <typename Scalar>
struct ForwardTrace {
  struct Gru {
    std::vector<Scalar> h;   // (T+1) x H in processing order, h[0] = 0
    std::vector<Scalar> r;   // T x H
    std::vector<Scalar> z;
    std::vector<Scalar> n;
    std::vector<Scalar> hn;  // recurrent part of the candidate, Whn h + bhn
  };

  int width = 0;
  int frames = 0;
  std::vector<std::vector<Scalar>> conv_in;   // input of each conv layer
  std::vector<std::vector<Scalar>> conv_act;  // post-ReLU, pre-pool
  std::vector<std::vector<int>> pool_arg;
  std::vector<Scalar> features;  // T x F
  std::vector<Scalar> proj;      // T x P, post-tanh
  Gru gru[2];
  std::vector<Scalar> rnn_out;   // T x O
  HeadOutputs heads;
};

struct StepLosses {
  double total = 0.0;
  double char_loss = 0.0;
  std::optional<double> row_loss;
};

template <typename Scalar>
class Model {
 public:
  // Deterministic in cfg.seed. Trunk and char-head parameters do not depend on
  // whether the row head is enabled.
  static Model Init(const ModelConfig& cfg);

  const ModelConfig& config() const { return config_; }
  std::vector<Tensor<Scalar>>& params() { return params_; }
  const std::vector<Tensor<Scalar>>& params() const { return params_; }
  size_t num_parameters() const;
  bool has_row_head() const { return config_.aux_head; }

  uint64_t step = 0;
  int epoch = 0;
  uint64_t label_map_hash = 0;

  // Throws Error(kInvalidArgument) for images that are not 32 high or whose
  // width is not a positive multiple of D.
  HeadOutputs Forward(const Image& image) const;
  ForwardTrace<Scalar> ForwardWithTrace(const Image& image) const;

  // Parameter gradients given loss gradients w.r.t. each head's pre-softmax
  // scores (T x (K+1) and T x (R+1)). `row_grad` may be empty.
  std::vector<std::vector<Scalar>> Backward(const ForwardTrace<Scalar>& trace,
                                            std::span<const double> char_grad,
                                            std::span<const double> row_grad) const;

  void ApplySgd(const std::vector<std::vector<Scalar>>& grads, Scalar lr);

  bool operator==(const Model& o) const {
    return config_ == o.config_ && params_ == o.params_ && step == o.step &&
           epoch == o.epoch && label_map_hash == o.label_map_hash;
  }

 private:
  friend struct ModelAccess;
  ModelConfig config_;
  std::vector<Tensor<Scalar>> params_;
};

// Per-sample loss and gradients of the multi-task objective. Throws
// Error(kInfeasible) when the sample's labels do not fit in T frames.
template <typename Scalar>
struct LossAndGrad {
  StepLosses losses;
  HeadOutputs outputs;
  std::vector<std::vector<Scalar>> grads;
};

template <typename Scalar>
LossAndGrad<Scalar> ComputeLossAndGrad(const Model<Scalar>& model,
                                       const WordSample& sample,
                                       double row_weight = 1.0);

// Rescales the gradients so their global L2 norm is at most `max_norm`
// (disabled when max_norm <= 0). Returns the norm before rescaling.
template <typename Scalar>
double ClipGradientNorm(std::vector<std::vector<Scalar>>& grads, double max_norm);

// One SGD step on total = char + row_weight * row, with optional global-norm
// gradient clipping. Returns the pre-update losses. Throws Error(kDivergence)
// on a non-finite loss or gradient.
template <typename Scalar>
StepLosses TrainStep(Model<Scalar>& model, const WordSample& sample, double lr,
                     double row_weight = 1.0, double clip_norm = 0.0);

// Evaluation-only loss (no gradients).
template <typename Scalar>
StepLosses EvaluateLoss(const Model<Scalar>& model, const WordSample& sample,
                        double row_weight = 1.0);

}  // namespace mtctc
