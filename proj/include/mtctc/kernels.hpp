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

namespace mtctc::kernels {

// Shape of a same-padded, stride-1 2D convolution over a C x H x W tensor
// (row-major, channel-major). Weights are out x in x k x k.
struct ConvShape {
  int in_channels;
  int out_channels;
  int height;
  int width;
  int kernel;
};

// out[o] = bias[o] + sum_i w[o,i] * in[i]   (out is overwritten)
template <typename Scalar>
void Conv2dForward(const ConvShape& s, std::span<const Scalar> in,
                   std::span<const Scalar> weights, std::span<const Scalar> bias,
                   std::span<Scalar> out);

// Accumulates dweights and dbias; writes din when non-empty.
template <typename Scalar>
void Conv2dBackward(const ConvShape& s, std::span<const Scalar> in,
                    std::span<const Scalar> weights, std::span<const Scalar> dout,
                    std::span<Scalar> dweights, std::span<Scalar> dbias,
                    std::span<Scalar> din);

// In-place ReLU followed by 2x2 max pooling. `argmax` receives, for each
// pooled cell, the flat index of the winning input.
template <typename Scalar>
void ReluMaxPool2x2(int channels, int height, int width, std::span<Scalar> act,
                    std::span<Scalar> pooled, std::span<int> argmax);

// Serial implementations kept as the reference the parallel kernels are
// tested and benchmarked against.
namespace reference {

template <typename Scalar>
void Conv2dForward(const ConvShape& s, std::span<const Scalar> in,
                   std::span<const Scalar> weights, std::span<const Scalar> bias,
                   std::span<Scalar> out);

template <typename Scalar>
void Conv2dBackward(const ConvShape& s, std::span<const Scalar> in,
                    std::span<const Scalar> weights, std::span<const Scalar> dout,
                    std::span<Scalar> dweights, std::span<Scalar> dbias,
                    std::span<Scalar> din);

}  // namespace reference

}  // namespace mtctc::kernels
