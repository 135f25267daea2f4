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

#include "mtctc/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

namespace mtctc::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr int64_t kParallelWork = 1 << 18;

int64_t Work(const ConvShape& s) {
  return int64_t(s.in_channels) * s.out_channels * s.height * s.width *
         s.kernel * s.kernel;
}

// out_plane += w * shifted(in_plane) over the valid region.
template <typename Scalar>
inline void AccumulateShifted(const ConvShape& s, const Scalar* in_plane,
                              Scalar w, int dy, int dx, Scalar* out_plane) {
  const int x0 = std::max(0, -dx);
  const int x1 = std::min(s.width, s.width - dx);
  const int y0 = std::max(0, -dy);
  const int y1 = std::min(s.height, s.height - dy);
  for (int y = y0; y < y1; ++y) {
    const Scalar* src = in_plane + size_t(y + dy) * s.width + dx;
    Scalar* dst = out_plane + size_t(y) * s.width;
    for (int x = x0; x < x1; ++x) dst[x] += w * src[x];
  }
}

template <typename Scalar>
inline Scalar DotShifted(const ConvShape& s, const Scalar* in_plane,
                         const Scalar* dout_plane, int dy, int dx) {
  const int x0 = std::max(0, -dx);
  const int x1 = std::min(s.width, s.width - dx);
  const int y0 = std::max(0, -dy);
  const int y1 = std::min(s.height, s.height - dy);
  // Fixed lanes keep the summation order deterministic and let the compiler
  // vectorize without reassociating.
  constexpr int kLanes = 8;
  Scalar lanes[kLanes] = {};
  for (int y = y0; y < y1; ++y) {
    const Scalar* src = in_plane + size_t(y + dy) * s.width + dx;
    const Scalar* g = dout_plane + size_t(y) * s.width;
    int x = x0;
    for (; x + kLanes <= x1; x += kLanes) {
      for (int l = 0; l < kLanes; ++l) lanes[l] += g[x + l] * src[x + l];
    }
    for (; x < x1; ++x) lanes[0] += g[x] * src[x];
  }
  Scalar acc = 0;
  for (Scalar v : lanes) acc += v;
  return acc;
}

template <typename Scalar>
void ForwardChannel(const ConvShape& s, const Scalar* in, const Scalar* weights,
                    const Scalar* bias, Scalar* out, int o) {
  const size_t plane = size_t(s.height) * s.width;
  const int pad = s.kernel / 2;
  Scalar* out_plane = out + o * plane;
  std::fill(out_plane, out_plane + plane, bias[o]);
  for (int i = 0; i < s.in_channels; ++i) {
    const Scalar* w = weights + (size_t(o) * s.in_channels + i) * s.kernel * s.kernel;
    for (int ky = 0; ky < s.kernel; ++ky) {
      for (int kx = 0; kx < s.kernel; ++kx) {
        AccumulateShifted(s, in + i * plane, w[ky * s.kernel + kx], ky - pad,
                          kx - pad, out_plane);
      }
    }
  }
}

template <typename Scalar>
void WeightGradChannel(const ConvShape& s, const Scalar* in, const Scalar* dout,
                       Scalar* dweights, Scalar* dbias, int o) {
  const size_t plane = size_t(s.height) * s.width;
  const int pad = s.kernel / 2;
  const Scalar* g = dout + o * plane;
  Scalar b = 0;
  for (size_t p = 0; p < plane; ++p) b += g[p];
  dbias[o] += b;
  for (int i = 0; i < s.in_channels; ++i) {
    Scalar* dw = dweights + (size_t(o) * s.in_channels + i) * s.kernel * s.kernel;
    for (int ky = 0; ky < s.kernel; ++ky) {
      for (int kx = 0; kx < s.kernel; ++kx) {
        dw[ky * s.kernel + kx] += DotShifted(s, in + i * plane, g, ky - pad, kx - pad);
      }
    }
  }
}

// din[i] = sum_o w[o,i] (*) dout[o], i.e. correlation with the flipped kernel.
template <typename Scalar>
void InputGradChannel(const ConvShape& s, const Scalar* weights,
                      const Scalar* dout, Scalar* din, int i) {
  const size_t plane = size_t(s.height) * s.width;
  const int pad = s.kernel / 2;
  Scalar* d = din + i * plane;
  std::fill(d, d + plane, Scalar(0));
  for (int o = 0; o < s.out_channels; ++o) {
    const Scalar* w = weights + (size_t(o) * s.in_channels + i) * s.kernel * s.kernel;
    for (int ky = 0; ky < s.kernel; ++ky) {
      for (int kx = 0; kx < s.kernel; ++kx) {
        AccumulateShifted(s, dout + o * plane, w[ky * s.kernel + kx], pad - ky,
                          pad - kx, d);
      }
    }
  }
}

}  // namespace

template <typename Scalar>
void Conv2dForward(const ConvShape& s, std::span<const Scalar> in,
                   std::span<const Scalar> weights, std::span<const Scalar> bias,
                   std::span<Scalar> out) {
  const bool parallel = Work(s) >= kParallelWork;
#pragma omp parallel for if (parallel) schedule(static)
  for (int o = 0; o < s.out_channels; ++o) {
    ForwardChannel(s, in.data(), weights.data(), bias.data(), out.data(), o);
  }
}

template <typename Scalar>
void Conv2dBackward(const ConvShape& s, std::span<const Scalar> in,
                    std::span<const Scalar> weights, std::span<const Scalar> dout,
                    std::span<Scalar> dweights, std::span<Scalar> dbias,
                    std::span<Scalar> din) {
  const bool parallel = Work(s) >= kParallelWork;
#pragma omp parallel if (parallel)
  {
#pragma omp for schedule(static) nowait
    for (int o = 0; o < s.out_channels; ++o) {
      WeightGradChannel(s, in.data(), dout.data(), dweights.data(), dbias.data(), o);
    }
    if (!din.empty()) {
#pragma omp for schedule(static)
      for (int i = 0; i < s.in_channels; ++i) {
        InputGradChannel(s, weights.data(), dout.data(), din.data(), i);
      }
    }
  }
}

template <typename Scalar>
void ReluMaxPool2x2(int channels, int height, int width, std::span<Scalar> act,
                    std::span<Scalar> pooled, std::span<int> argmax) {
  for (Scalar& v : act) v = v > Scalar(0) ? v : Scalar(0);
  const int ph = height / 2, pw = width / 2;
  for (int c = 0; c < channels; ++c) {
    const size_t base = size_t(c) * height * width;
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        size_t best = base + size_t(2 * y) * width + 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const size_t idx = base + size_t(2 * y + dy) * width + 2 * x + dx;
            if (act[idx] > act[best]) best = idx;
          }
        }
        const size_t out = (size_t(c) * ph + y) * pw + x;
        pooled[out] = act[best];
        argmax[out] = static_cast<int>(best);
      }
    }
  }
}

namespace reference {

template <typename Scalar>
void Conv2dForward(const ConvShape& s, std::span<const Scalar> in,
                   std::span<const Scalar> weights, std::span<const Scalar> bias,
                   std::span<Scalar> out) {
  const int pad = s.kernel / 2;
  for (int o = 0; o < s.out_channels; ++o) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        Scalar acc = bias[o];
        for (int i = 0; i < s.in_channels; ++i) {
          for (int ky = 0; ky < s.kernel; ++ky) {
            for (int kx = 0; kx < s.kernel; ++kx) {
              const int iy = y + ky - pad, ix = x + kx - pad;
              if (iy < 0 || iy >= s.height || ix < 0 || ix >= s.width) continue;
              acc += weights[((size_t(o) * s.in_channels + i) * s.kernel + ky) * s.kernel + kx] *
                     in[(size_t(i) * s.height + iy) * s.width + ix];
            }
          }
        }
        out[(size_t(o) * s.height + y) * s.width + x] = acc;
      }
    }
  }
}

template <typename Scalar>
void Conv2dBackward(const ConvShape& s, std::span<const Scalar> in,
                    std::span<const Scalar> weights, std::span<const Scalar> dout,
                    std::span<Scalar> dweights, std::span<Scalar> dbias,
                    std::span<Scalar> din) {
  const int pad = s.kernel / 2;
  if (!din.empty()) std::fill(din.begin(), din.end(), Scalar(0));
  for (int o = 0; o < s.out_channels; ++o) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const Scalar g = dout[(size_t(o) * s.height + y) * s.width + x];
        dbias[o] += g;
        for (int i = 0; i < s.in_channels; ++i) {
          for (int ky = 0; ky < s.kernel; ++ky) {
            for (int kx = 0; kx < s.kernel; ++kx) {
              const int iy = y + ky - pad, ix = x + kx - pad;
              if (iy < 0 || iy >= s.height || ix < 0 || ix >= s.width) continue;
              const size_t widx = ((size_t(o) * s.in_channels + i) * s.kernel + ky) * s.kernel + kx;
              const size_t iidx = (size_t(i) * s.height + iy) * s.width + ix;
              dweights[widx] += g * in[iidx];
              if (!din.empty()) din[iidx] += g * weights[widx];
            }
          }
        }
      }
    }
  }
}

}  // namespace reference

#define MTCTC_INSTANTIATE(T)                                                   \
  template void Conv2dForward<T>(const ConvShape&, std::span<const T>,        \
                                 std::span<const T>, std::span<const T>,      \
                                 std::span<T>);                               \
  template void Conv2dBackward<T>(const ConvShape&, std::span<const T>,       \
                                  std::span<const T>, std::span<const T>,     \
                                  std::span<T>, std::span<T>, std::span<T>);  \
  template void ReluMaxPool2x2<T>(int, int, int, std::span<T>, std::span<T>,  \
                                  std::span<int>);                            \
  template void reference::Conv2dForward<T>(                                  \
      const ConvShape&, std::span<const T>, std::span<const T>,               \
      std::span<const T>, std::span<T>);                                      \
  template void reference::Conv2dBackward<T>(                                 \
      const ConvShape&, std::span<const T>, std::span<const T>,               \
      std::span<const T>, std::span<T>, std::span<T>, std::span<T>);

MTCTC_INSTANTIATE(float)
MTCTC_INSTANTIATE(double)

#undef MTCTC_INSTANTIATE

}  // namespace mtctc::kernels
