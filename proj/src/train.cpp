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

#include "mtctc/train.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <sstream>

#include "mtctc/ctc_batch.hpp"
#include "mtctc/error.hpp"
#include "mtctc/metrics.hpp"
#include "mtctc/rng.hpp"

namespace mtctc {

namespace {

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string FormatCurveRow(const EpochRecord& r) {
  return std::to_string(r.epoch) + ',' + Fixed(r.train_loss) + ',' +
         Fixed(r.train_char_loss) + ',' +
         (r.train_row_loss ? Fixed(*r.train_row_loss) : std::string()) + ',' +
         Fixed(r.val_char_loss) + ',' + Fixed(r.train_word_acc);
}

std::vector<EpochRecord> ParseCurves(const std::string& text) {
  std::vector<EpochRecord> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      if (line != kCurvesHeader) throw Error(ErrorKind::kParse, "bad curves header");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    std::string part;
    while (std::getline(fields, part, ',')) f.push_back(part);
    if (f.size() != 6) throw Error(ErrorKind::kParse, "curves row '" + line + "'");
    EpochRecord r;
    r.epoch = std::stoi(f[0]);
    r.train_loss = std::stod(f[1]);
    r.train_char_loss = std::stod(f[2]);
    if (!f[3].empty()) r.train_row_loss = std::stod(f[3]);
    r.val_char_loss = std::stod(f[4]);
    r.train_word_acc = std::stod(f[5]);
    out.push_back(r);
  }
  return out;
}

double MeanValidationLoss(const Model<float>& model,
                          std::span<const WordSample> samples) {
  const int64_t n = static_cast<int64_t>(samples.size());
  std::vector<double> losses(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (int64_t i = 0; i < n; ++i) {
    try {
      const HeadOutputs out = model.Forward(samples[i].image);
      losses[i] = ctc::CtcLoss(out.chars, samples[i].chars).loss;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return ctc::OrderedMean(losses);
}

TrainResult Train(Model<float> model, std::span<const WordSample> train,
                  std::span<const WordSample> validation,
                  const TrainOptions& options,
                  const std::function<void(const EpochRecord&, const Model<float>&)>&
                      on_epoch) {
  if (options.epochs < 0) throw Error(ErrorKind::kInvalidArgument, "epochs < 0");
  if (!(options.lr >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "lr < 0");
  if (train.empty() && options.epochs > 0) {
    throw Error(ErrorKind::kInvalidArgument, "empty training split");
  }

  TrainResult result{model, model, 0.0, {}};
  bool have_best = false;
  std::vector<size_t> order(train.size());
  const int first_epoch = model.epoch + 1;

  for (int epoch = first_epoch; epoch < first_epoch + options.epochs; ++epoch) {
    const double lr =
        options.lr * std::pow(options.lr_decay, double(epoch - 1));
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(DeriveSeed({options.seed, 0x65706f6368ULL, uint64_t(epoch)}));
    rng.Shuffle(order);

    double sum_total = 0.0, sum_char = 0.0, sum_row = 0.0;
    int64_t correct = 0;
    for (size_t idx : order) {
      const WordSample& s = train[idx];
      LossAndGrad<float> lg = ComputeLossAndGrad(model, s, options.row_weight);
      bool finite = std::isfinite(lg.losses.total);
      for (const auto& g : lg.grads) {
        for (float v : g) finite = finite && std::isfinite(v);
      }
      if (!finite) {
        throw Error(ErrorKind::kDivergence,
                    "epoch " + std::to_string(epoch) + " step " +
                        std::to_string(model.step) + ": non-finite loss on word " +
                        std::to_string(s.word_id) + " writer " +
                        std::to_string(s.writer_id));
      }
      ClipGradientNorm(lg.grads, options.clip_norm);
      if (lr > 0.0) model.ApplySgd(lg.grads, static_cast<float>(lr));
      ++model.step;
      sum_total += lg.losses.total;
      sum_char += lg.losses.char_loss;
      if (lg.losses.row_loss) sum_row += *lg.losses.row_loss;
      if (GreedyDecode(lg.outputs.chars) == s.chars) ++correct;
    }
    model.epoch = epoch;

    const double n = static_cast<double>(train.size());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sum_total / n;
    rec.train_char_loss = sum_char / n;
    if (model.has_row_head()) rec.train_row_loss = sum_row / n;
    rec.train_word_acc = 100.0 * double(correct) / n;
    rec.val_char_loss = validation.empty() ? rec.train_char_loss
                                           : MeanValidationLoss(model, validation);
    result.curve.push_back(rec);
    if (!have_best || rec.val_char_loss < result.best_val_char_loss) {
      have_best = true;
      result.best_val_char_loss = rec.val_char_loss;
      result.best_model = model;
    }
    if (on_epoch) on_epoch(rec, model);
  }
  if (!have_best && !validation.empty()) {
    result.best_val_char_loss = MeanValidationLoss(model, validation);
  }
  result.final_model = std::move(model);
  return result;
}

}  // namespace mtctc
