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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtctc/glyphforge.hpp"
#include "mtctc/net.hpp"

namespace mtctc {

struct TrainOptions {
  int epochs = 30;
  double lr = 0.05;
  double lr_decay = 1.0;  // multiplier applied after every epoch
  double row_weight = 1.0;
  double clip_norm = 5.0;  // global gradient-norm cap, <= 0 disables
  uint64_t seed = 1;      // sample order
};

// One row of curves.csv.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;       // mean total objective over the epoch
  double train_char_loss = 0.0;
  std::optional<double> train_row_loss;
  double val_char_loss = 0.0;    // mean char-head CTC loss on validation
  double train_word_acc = 0.0;   // exact-match rate of greedy decodes, %

  bool operator==(const EpochRecord&) const = default;
};

inline constexpr const char* kCurvesHeader =
    "epoch,train_loss,train_char_loss,train_row_loss,val_char_loss,train_word_acc";
std::string FormatCurveRow(const EpochRecord& record);
std::vector<EpochRecord> ParseCurves(const std::string& text);

// Mean char-head CTC loss over samples (parallel, order-stable reduction).
double MeanValidationLoss(const Model<float>& model,
                          std::span<const WordSample> samples);

struct TrainResult {
  Model<float> final_model;
  Model<float> best_model;
  double best_val_char_loss = 0.0;
  std::vector<EpochRecord> curve;
};

// Per-sample SGD for `options.epochs` epochs starting at model.epoch + 1.
// Sample order per epoch is a seeded shuffle. The best model is the one with
// the lowest validation char loss (earliest on ties); with zero epochs it is
// the input model. `on_epoch` runs after each epoch.
TrainResult Train(Model<float> model, std::span<const WordSample> train,
                  std::span<const WordSample> validation,
                  const TrainOptions& options,
                  const std::function<void(const EpochRecord&, const Model<float>&)>&
                      on_epoch = {});

}  // namespace mtctc
