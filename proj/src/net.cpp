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

#include "mtctc/net.hpp"

#include <cmath>
#include <sstream>

#include "mtctc/error.hpp"
#include "mtctc/kernels.hpp"
#include "mtctc/rng.hpp"

namespace mtctc {

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::Validate() const {
  auto fail = [](const std::string& m) {
    throw Error(ErrorKind::kInvalidArgument, "model config: " + m);
  };
  if (conv_channels.empty()) fail("at least one conv layer is required");
  for (int c : conv_channels) {
    if (c < 1) fail("conv channels must be positive");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) fail("kernel size must be odd");
  if (kGlyphSize % downsampling() != 0 || feature_height() < 1) {
    fail("downsampling factor " + std::to_string(downsampling()) +
         " does not divide 32");
  }
  if (projection_dim < 1 || hidden_size < 1) fail("sizes must be positive");
  if (num_chars < 1 || num_rows < 1) fail("label counts must be positive");
  if (max_word_len < 1) fail("max word length must be positive");
  for (int len = 1; len <= max_word_len; ++len) {
    const int frames = frames_for_width(kGlyphSize * len);
    if (frames < 2 * len + 1) {
      fail("T=" + std::to_string(frames) + " for a word of length " +
           std::to_string(len) + " is below 2L+1");
    }
  }
}

std::string ModelConfig::Serialize() const {
  std::ostringstream out;
  out << "conv_channels=";
  for (size_t i = 0; i < conv_channels.size(); ++i) {
    out << (i ? "," : "") << conv_channels[i];
  }
  out << "\nkernel_size=" << kernel_size << "\nprojection_dim=" << projection_dim
      << "\nhidden_size=" << hidden_size
      << "\nbidirectional=" << (bidirectional ? 1 : 0)
      << "\nnum_chars=" << num_chars << "\nnum_rows=" << num_rows
      << "\naux_head=" << (aux_head ? 1 : 0) << "\nmax_word_len=" << max_word_len
      << "\nseed=" << seed << "\n";
  return out.str();
}

ModelConfig ModelConfig::Parse(std::string_view text) {
  ModelConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kParse, "model config line '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "conv_channels") {
        cfg.conv_channels.clear();
        std::istringstream parts(value);
        std::string p;
        while (std::getline(parts, p, ',')) cfg.conv_channels.push_back(std::stoi(p));
      } else if (key == "kernel_size") {
        cfg.kernel_size = std::stoi(value);
      } else if (key == "projection_dim") {
        cfg.projection_dim = std::stoi(value);
      } else if (key == "hidden_size") {
        cfg.hidden_size = std::stoi(value);
      } else if (key == "bidirectional") {
        cfg.bidirectional = std::stoi(value) != 0;
      } else if (key == "num_chars") {
        cfg.num_chars = std::stoi(value);
      } else if (key == "num_rows") {
        cfg.num_rows = std::stoi(value);
      } else if (key == "aux_head") {
        cfg.aux_head = std::stoi(value) != 0;
      } else if (key == "max_word_len") {
        cfg.max_word_len = std::stoi(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else {
        throw Error(ErrorKind::kParse, "unknown model config key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kParse, "bad value for '" + key + "': " + value);
    }
  }
  return cfg;
}

uint64_t ModelConfig::Hash() const { return Fnv1a64(Serialize()); }

// ---------------------------------------------------------------------------
// Parameter layout

struct ModelAccess {
  struct Layout {
    std::vector<int> conv_w, conv_b;
    int proj_w = -1, proj_b = -1;
    int wi[2] = {-1, -1}, wh[2] = {-1, -1}, bi[2] = {-1, -1}, bh[2] = {-1, -1};
    int char_w = -1, char_b = -1, row_w = -1, row_b = -1;
  };

  static Layout MakeLayout(const ModelConfig& cfg) {
    Layout l;
    int idx = 0;
    for (size_t i = 0; i < cfg.conv_channels.size(); ++i) {
      l.conv_w.push_back(idx++);
      l.conv_b.push_back(idx++);
    }
    l.proj_w = idx++;
    l.proj_b = idx++;
    for (int d = 0; d < (cfg.bidirectional ? 2 : 1); ++d) {
      l.wi[d] = idx++;
      l.wh[d] = idx++;
      l.bi[d] = idx++;
      l.bh[d] = idx++;
    }
    l.char_w = idx++;
    l.char_b = idx++;
    if (cfg.aux_head) {
      l.row_w = idx++;
      l.row_b = idx++;
    }
    return l;
  }
};

namespace {

using Layout = ModelAccess::Layout;

template <typename Scalar>
Scalar Sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

// Dot product over fixed lanes: deterministic order, vectorizable.
template <typename Scalar>
Scalar Dot(const Scalar* a, const Scalar* b, int n) {
  constexpr int kLanes = 8;
  Scalar lanes[kLanes] = {};
  int i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int l = 0; l < kLanes; ++l) lanes[l] += a[i + l] * b[i + l];
  }
  for (; i < n; ++i) lanes[0] += a[i] * b[i];
  Scalar acc = 0;
  for (Scalar v : lanes) acc += v;
  return acc;
}

// y = W x + b, W is rows x cols.
template <typename Scalar>
void Affine(const Scalar* w, const Scalar* b, const Scalar* x, int rows, int cols,
            Scalar* y) {
  for (int r = 0; r < rows; ++r) {
    y[r] = (b ? b[r] : Scalar(0)) + Dot(w + size_t(r) * cols, x, cols);
  }
}

// dW += g x^T, db += g, dx += W^T g (dx may be null).
template <typename Scalar>
void AffineBackward(const Scalar* w, const Scalar* x, const Scalar* g, int rows,
                    int cols, Scalar* dw, Scalar* db, Scalar* dx) {
  for (int r = 0; r < rows; ++r) {
    const Scalar gr = g[r];
    if (db) db[r] += gr;
    if (gr == Scalar(0)) continue;
    Scalar* dwr = dw + size_t(r) * cols;
    for (int c = 0; c < cols; ++c) dwr[c] += gr * x[c];
    if (dx) {
      const Scalar* wr = w + size_t(r) * cols;
      for (int c = 0; c < cols; ++c) dx[c] += gr * wr[c];
    }
  }
}

template <typename Scalar>
Tensor<Scalar> MakeTensor(const std::string& name, std::vector<int> shape,
                          double bound, uint64_t seed) {
  Tensor<Scalar> t;
  t.name = name;
  t.shape = std::move(shape);
  size_t n = 1;
  for (int d : t.shape) n *= size_t(d);
  t.data.assign(n, Scalar(0));
  if (bound > 0.0) {
    Rng rng(DeriveSeed({seed, Fnv1a64(name)}));
    for (Scalar& v : t.data) v = static_cast<Scalar>(rng.Uniform(-bound, bound));
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

template <typename Scalar>
Model<Scalar> Model<Scalar>::Init(const ModelConfig& cfg) {
  cfg.Validate();
  Model m;
  m.config_ = cfg;
  auto& p = m.params_;
  const int k = cfg.kernel_size;
  int in_ch = 1;
  for (size_t i = 0; i < cfg.conv_channels.size(); ++i) {
    const int out_ch = cfg.conv_channels[i];
    const int fan_in = in_ch * k * k;
    const std::string base = "conv" + std::to_string(i);
    p.push_back(MakeTensor<Scalar>(base + ".weight", {out_ch, in_ch, k, k},
                                   std::sqrt(6.0 / fan_in), cfg.seed));
    p.push_back(MakeTensor<Scalar>(base + ".bias", {out_ch}, 0.0, cfg.seed));
    in_ch = out_ch;
  }
  const int features = in_ch * cfg.feature_height();
  const int P = cfg.projection_dim, H = cfg.hidden_size;
  p.push_back(MakeTensor<Scalar>("proj.weight", {P, features},
                                 std::sqrt(3.0 / features), cfg.seed));
  p.push_back(MakeTensor<Scalar>("proj.bias", {P}, 0.0, cfg.seed));
  for (int d = 0; d < (cfg.bidirectional ? 2 : 1); ++d) {
    const std::string base = d == 0 ? "gru.fwd" : "gru.bwd";
    p.push_back(MakeTensor<Scalar>(base + ".wi", {3 * H, P}, std::sqrt(3.0 / P), cfg.seed));
    p.push_back(MakeTensor<Scalar>(base + ".wh", {3 * H, H}, std::sqrt(3.0 / H), cfg.seed));
    p.push_back(MakeTensor<Scalar>(base + ".bi", {3 * H}, 0.0, cfg.seed));
    p.push_back(MakeTensor<Scalar>(base + ".bh", {3 * H}, 0.0, cfg.seed));
  }
  const int O = cfg.rnn_output_dim();
  p.push_back(MakeTensor<Scalar>("char.weight", {cfg.num_chars + 1, O},
                                 std::sqrt(3.0 / O), cfg.seed));
  p.push_back(MakeTensor<Scalar>("char.bias", {cfg.num_chars + 1}, 0.0, cfg.seed));
  if (cfg.aux_head) {
    p.push_back(MakeTensor<Scalar>("row.weight", {cfg.num_rows + 1, O},
                                   std::sqrt(3.0 / O), cfg.seed));
    p.push_back(MakeTensor<Scalar>("row.bias", {cfg.num_rows + 1}, 0.0, cfg.seed));
  }
  return m;
}

template <typename Scalar>
size_t Model<Scalar>::num_parameters() const {
  size_t n = 0;
  for (const auto& t : params_) n += t.data.size();
  return n;
}

template <typename Scalar>
HeadOutputs Model<Scalar>::Forward(const Image& image) const {
  return ForwardWithTrace(image).heads;
}

template <typename Scalar>
ForwardTrace<Scalar> Model<Scalar>::ForwardWithTrace(const Image& image) const {
  const ModelConfig& cfg = config_;
  const int D = cfg.downsampling();
  if (image.height != kGlyphSize || image.width <= 0 || image.width % D != 0 ||
      image.pixels.size() != size_t(image.height) * image.width) {
    throw Error(ErrorKind::kInvalidArgument,
                "image " + std::to_string(image.height) + "x" +
                    std::to_string(image.width) + " needs height 32 and width a "
                    "positive multiple of " + std::to_string(D));
  }
  const Layout L = ModelAccess::MakeLayout(cfg);
  const auto& p = params_;

  ForwardTrace<Scalar> tr;
  tr.width = image.width;
  const int T = image.width / D;
  tr.frames = T;

  // Conv trunk.
  std::vector<Scalar> x(image.pixels.begin(), image.pixels.end());
  int in_ch = 1, h = kGlyphSize, w = image.width;
  for (size_t l = 0; l < cfg.conv_channels.size(); ++l) {
    const int out_ch = cfg.conv_channels[l];
    const kernels::ConvShape shape{in_ch, out_ch, h, w, cfg.kernel_size};
    std::vector<Scalar> act(size_t(out_ch) * h * w);
    kernels::Conv2dForward<Scalar>(shape, x, p[L.conv_w[l]].data,
                                   p[L.conv_b[l]].data, act);
    std::vector<Scalar> pooled(size_t(out_ch) * (h / 2) * (w / 2));
    std::vector<int> arg(pooled.size());
    kernels::ReluMaxPool2x2<Scalar>(out_ch, h, w, act, pooled, arg);
    tr.conv_in.push_back(std::move(x));
    tr.conv_act.push_back(std::move(act));
    tr.pool_arg.push_back(std::move(arg));
    x = std::move(pooled);
    in_ch = out_ch;
    h /= 2;
    w /= 2;
  }

  // Columns -> frames.
  const int F = in_ch * h;
  tr.features.resize(size_t(T) * F);
  for (int c = 0; c < in_ch; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int t = 0; t < T; ++t) {
        tr.features[size_t(t) * F + c * h + y] = x[(size_t(c) * h + y) * w + t];
      }
    }
  }

  const int P = cfg.projection_dim;
  tr.proj.resize(size_t(T) * P);
  for (int t = 0; t < T; ++t) {
    Scalar* out = &tr.proj[size_t(t) * P];
    Affine(p[L.proj_w].data.data(), p[L.proj_b].data.data(),
           &tr.features[size_t(t) * F], P, F, out);
    for (int i = 0; i < P; ++i) out[i] = std::tanh(out[i]);
  }

  // GRU, gate order (r, z, n).
  const int H = cfg.hidden_size;
  const int O = cfg.rnn_output_dim();
  tr.rnn_out.assign(size_t(T) * O, Scalar(0));
  std::vector<Scalar> gi(3 * H), gh(3 * H);
  for (int d = 0; d < (cfg.bidirectional ? 2 : 1); ++d) {
    auto& g = tr.gru[d];
    g.h.assign(size_t(T + 1) * H, Scalar(0));
    g.r.resize(size_t(T) * H);
    g.z.resize(size_t(T) * H);
    g.n.resize(size_t(T) * H);
    g.hn.resize(size_t(T) * H);
    const Scalar* wi = p[L.wi[d]].data.data();
    const Scalar* wh = p[L.wh[d]].data.data();
    const Scalar* bi = p[L.bi[d]].data.data();
    const Scalar* bh = p[L.bh[d]].data.data();
    for (int i = 0; i < T; ++i) {
      const int t = d == 0 ? i : T - 1 - i;
      const Scalar* hp = &g.h[size_t(i) * H];
      Scalar* hn = &g.h[size_t(i + 1) * H];
      Affine(wi, bi, &tr.proj[size_t(t) * P], 3 * H, P, gi.data());
      Affine(wh, bh, hp, 3 * H, H, gh.data());
      for (int j = 0; j < H; ++j) {
        const Scalar r = Sigmoid(gi[j] + gh[j]);
        const Scalar z = Sigmoid(gi[H + j] + gh[H + j]);
        const Scalar n = std::tanh(gi[2 * H + j] + r * gh[2 * H + j]);
        g.r[size_t(i) * H + j] = r;
        g.z[size_t(i) * H + j] = z;
        g.n[size_t(i) * H + j] = n;
        g.hn[size_t(i) * H + j] = gh[2 * H + j];
        hn[j] = (Scalar(1) - z) * n + z * hp[j];
        tr.rnn_out[size_t(t) * O + d * H + j] = hn[j];
      }
    }
  }

  // Heads.
  auto head = [&](int wi, int bi, int labels) {
    const int width = labels + 1;
    std::vector<Scalar> s(width);
    std::vector<double> scores(size_t(T) * width);
    for (int t = 0; t < T; ++t) {
      Affine(p[wi].data.data(), p[bi].data.data(), &tr.rnn_out[size_t(t) * O],
             width, O, s.data());
      for (int k = 0; k < width; ++k) scores[size_t(t) * width + k] = s[k];
    }
    return ctc::LogProbSequence::FromScores(T, labels, scores);
  };
  tr.heads.chars = head(L.char_w, L.char_b, cfg.num_chars);
  if (cfg.aux_head) tr.heads.rows = head(L.row_w, L.row_b, cfg.num_rows);
  return tr;
}

template <typename Scalar>
std::vector<std::vector<Scalar>> Model<Scalar>::Backward(
    const ForwardTrace<Scalar>& tr, std::span<const double> char_grad,
    std::span<const double> row_grad) const {
  const ModelConfig& cfg = config_;
  const Layout L = ModelAccess::MakeLayout(cfg);
  const auto& p = params_;
  const int T = tr.frames;
  const int O = cfg.rnn_output_dim();
  const int H = cfg.hidden_size;
  const int P = cfg.projection_dim;

  std::vector<std::vector<Scalar>> grads(p.size());
  for (size_t i = 0; i < p.size(); ++i) grads[i].assign(p[i].data.size(), Scalar(0));

  // Heads.
  std::vector<Scalar> d_out(size_t(T) * O, Scalar(0));
  auto head_back = [&](int wi, int bi, int labels, std::span<const double> g) {
    const int width = labels + 1;
    if (g.size() != size_t(T) * width) {
      throw Error(ErrorKind::kInvalidArgument, "head gradient size mismatch");
    }
    std::vector<Scalar> gs(width);
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k < width; ++k) gs[k] = static_cast<Scalar>(g[size_t(t) * width + k]);
      AffineBackward(p[wi].data.data(), &tr.rnn_out[size_t(t) * O], gs.data(), width,
                     O, grads[wi].data(), grads[bi].data(), &d_out[size_t(t) * O]);
    }
  };
  head_back(L.char_w, L.char_b, cfg.num_chars, char_grad);
  if (cfg.aux_head && !row_grad.empty()) {
    head_back(L.row_w, L.row_b, cfg.num_rows, row_grad);
  }

  // GRU, back through time.
  std::vector<Scalar> d_proj(size_t(T) * P, Scalar(0));
  std::vector<Scalar> dh(H), dh_prev(H), dgi(3 * H), dgh(3 * H);
  for (int d = 0; d < (cfg.bidirectional ? 2 : 1); ++d) {
    const auto& g = tr.gru[d];
    const Scalar* wi = p[L.wi[d]].data.data();
    const Scalar* wh = p[L.wh[d]].data.data();
    std::fill(dh_prev.begin(), dh_prev.end(), Scalar(0));
    for (int i = T - 1; i >= 0; --i) {
      const int t = d == 0 ? i : T - 1 - i;
      const Scalar* hp = &g.h[size_t(i) * H];
      for (int j = 0; j < H; ++j) {
        dh[j] = dh_prev[j] + d_out[size_t(t) * O + d * H + j];
      }
      for (int j = 0; j < H; ++j) {
        const size_t at = size_t(i) * H + j;
        const Scalar r = g.r[at], z = g.z[at], n = g.n[at], hn = g.hn[at];
        const Scalar dn = dh[j] * (Scalar(1) - z);
        const Scalar dz = dh[j] * (hp[j] - n);
        const Scalar dan = dn * (Scalar(1) - n * n);
        const Scalar dr = dan * hn;
        const Scalar dar = dr * r * (Scalar(1) - r);
        const Scalar daz = dz * z * (Scalar(1) - z);
        dgi[j] = dar;
        dgi[H + j] = daz;
        dgi[2 * H + j] = dan;
        dgh[j] = dar;
        dgh[H + j] = daz;
        dgh[2 * H + j] = dan * r;
        dh_prev[j] = dh[j] * z;
      }
      AffineBackward(wi, &tr.proj[size_t(t) * P], dgi.data(), 3 * H, P,
                     grads[L.wi[d]].data(), grads[L.bi[d]].data(),
                     &d_proj[size_t(t) * P]);
      AffineBackward(wh, hp, dgh.data(), 3 * H, H, grads[L.wh[d]].data(),
                     grads[L.bh[d]].data(), dh_prev.data());
    }
  }

  // Projection.
  const int C = cfg.conv_channels.back();
  const int h = cfg.feature_height();
  const int F = C * h;
  std::vector<Scalar> d_feat(size_t(T) * F, Scalar(0));
  std::vector<Scalar> dpre(P);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < P; ++i) {
      const Scalar y = tr.proj[size_t(t) * P + i];
      dpre[i] = d_proj[size_t(t) * P + i] * (Scalar(1) - y * y);
    }
    AffineBackward(p[L.proj_w].data.data(), &tr.features[size_t(t) * F], dpre.data(),
                   P, F, grads[L.proj_w].data(), grads[L.proj_b].data(),
                   &d_feat[size_t(t) * F]);
  }

  // Frames -> last pooled map.
  std::vector<Scalar> d_pooled(size_t(C) * h * T);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int t = 0; t < T; ++t) {
        d_pooled[(size_t(c) * h + y) * T + t] = d_feat[size_t(t) * F + c * h + y];
      }
    }
  }

  // Conv trunk, last layer first.
  for (int l = static_cast<int>(cfg.conv_channels.size()) - 1; l >= 0; --l) {
    const int out_ch = cfg.conv_channels[l];
    const int in_ch = l == 0 ? 1 : cfg.conv_channels[l - 1];
    const int lh = kGlyphSize >> l;
    const int lw = tr.width >> l;
    const auto& act = tr.conv_act[l];
    std::vector<Scalar> d_act(act.size(), Scalar(0));
    const auto& arg = tr.pool_arg[l];
    for (size_t i = 0; i < arg.size(); ++i) {
      if (act[arg[i]] > Scalar(0)) d_act[arg[i]] += d_pooled[i];
    }
    std::vector<Scalar> d_in;
    if (l > 0) d_in.resize(size_t(in_ch) * lh * lw);
    const kernels::ConvShape shape{in_ch, out_ch, lh, lw, cfg.kernel_size};
    kernels::Conv2dBackward<Scalar>(shape, tr.conv_in[l], p[L.conv_w[l]].data, d_act,
                                    grads[L.conv_w[l]], grads[L.conv_b[l]], d_in);
    d_pooled = std::move(d_in);
  }
  return grads;
}

template <typename Scalar>
void Model<Scalar>::ApplySgd(const std::vector<std::vector<Scalar>>& grads, Scalar lr) {
  if (grads.size() != params_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "gradient/parameter count mismatch");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& data = params_[i].data;
    for (size_t j = 0; j < data.size(); ++j) data[j] -= lr * grads[i][j];
  }
}

// ---------------------------------------------------------------------------
// Training

namespace {

void CheckHeadLabels(const ModelConfig& cfg, const WordSample& s) {
  if (cfg.aux_head && s.rows.size() != s.chars.size()) {
    throw Error(ErrorKind::kInvalidArgument, "sample rows/chars length mismatch");
  }
}

std::string SampleTag(const WordSample& s) {
  return "sample (word " + std::to_string(s.word_id) + ", writer " +
         std::to_string(s.writer_id) + ")";
}

}  // namespace

template <typename Scalar>
LossAndGrad<Scalar> ComputeLossAndGrad(const Model<Scalar>& model,
                                       const WordSample& sample, double row_weight) {
  CheckHeadLabels(model.config(), sample);
  ForwardTrace<Scalar> tr = model.ForwardWithTrace(sample.image);
  std::optional<ctc::HeadTarget> row;
  if (tr.heads.rows) row.emplace(ctc::HeadTarget{*tr.heads.rows, sample.rows});
  ctc::TotalLoss total;
  try {
    total = ctc::ComputeTotalLoss({tr.heads.chars, sample.chars}, row, row_weight);
  } catch (const Error& e) {
    throw Error(e.kind(), SampleTag(sample) + ": " + e.detail());
  }
  LossAndGrad<Scalar> out;
  out.losses = {total.total, total.char_loss, total.row_loss};
  out.grads = model.Backward(tr, total.char_grad, total.row_grad);
  out.outputs = std::move(tr.heads);
  return out;
}

template <typename Scalar>
double ClipGradientNorm(std::vector<std::vector<Scalar>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (Scalar v : g) sq += double(v) * double(v);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Scalar scale = static_cast<Scalar>(max_norm / norm);
    for (auto& g : grads)
      for (Scalar& v : g) v *= scale;
  }
  return norm;
}

template <typename Scalar>
StepLosses TrainStep(Model<Scalar>& model, const WordSample& sample, double lr,
                     double row_weight, double clip_norm) {
  if (!(lr >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning rate < 0");
  LossAndGrad<Scalar> lg;
  try {
    lg = ComputeLossAndGrad(model, sample, row_weight);
  } catch (const Error& e) {
    // A feasible target whose probability underflowed to zero means the
    // parameters have blown up.
    const int frames = model.config().frames_for_width(sample.image.width);
    if (e.kind() == ErrorKind::kInfeasible && ctc::IsFeasible(frames, sample.chars) &&
        ctc::IsFeasible(frames, sample.rows)) {
      throw Error(ErrorKind::kDivergence,
                  e.detail() + " at step " + std::to_string(model.step));
    }
    throw;
  }
  if (!std::isfinite(lg.losses.total)) {
    throw Error(ErrorKind::kDivergence,
                SampleTag(sample) + " at step " + std::to_string(model.step) +
                    ": loss is not finite");
  }
  for (size_t i = 0; i < lg.grads.size(); ++i) {
    for (Scalar g : lg.grads[i]) {
      if (!std::isfinite(g)) {
        throw Error(ErrorKind::kDivergence,
                    SampleTag(sample) + " at step " + std::to_string(model.step) +
                        ": non-finite gradient in " + model.params()[i].name);
      }
    }
  }
  ClipGradientNorm(lg.grads, clip_norm);
  if (lr > 0.0) model.ApplySgd(lg.grads, static_cast<Scalar>(lr));
  ++model.step;
  return lg.losses;
}

template <typename Scalar>
StepLosses EvaluateLoss(const Model<Scalar>& model, const WordSample& sample,
                        double row_weight) {
  CheckHeadLabels(model.config(), sample);
  const HeadOutputs out = model.Forward(sample.image);
  StepLosses losses;
  try {
    losses.char_loss = ctc::CtcLoss(out.chars, sample.chars).loss;
    losses.total = losses.char_loss;
    if (out.rows) {
      losses.row_loss = ctc::CtcLoss(*out.rows, sample.rows).loss;
      losses.total = losses.char_loss + row_weight * *losses.row_loss;
    }
  } catch (const Error& e) {
    throw Error(e.kind(), SampleTag(sample) + ": " + e.detail());
  }
  return losses;
}

template class Model<float>;
template class Model<double>;
template LossAndGrad<float> ComputeLossAndGrad(const Model<float>&, const WordSample&, double);
template LossAndGrad<double> ComputeLossAndGrad(const Model<double>&, const WordSample&, double);
template double ClipGradientNorm(std::vector<std::vector<float>>&, double);
template double ClipGradientNorm(std::vector<std::vector<double>>&, double);
template StepLosses TrainStep(Model<float>&, const WordSample&, double, double, double);
template StepLosses TrainStep(Model<double>&, const WordSample&, double, double, double);
template StepLosses EvaluateLoss(const Model<float>&, const WordSample&, double);
template StepLosses EvaluateLoss(const Model<double>&, const WordSample&, double);

}  // namespace mtctc
